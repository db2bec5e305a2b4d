#include "rismimo/modem.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "rismimo/errors.hpp"

namespace rismimo {

namespace {

std::uint32_t gray(std::uint32_t i) { return i ^ (i >> 1); }

std::uint32_t group_value(std::span<const std::uint8_t> bits, std::size_t first, std::size_t width) {
  std::uint32_t v = 0;
  for (std::size_t b = 0; b < width; ++b) {
    const std::uint8_t bit = bits[first + b];
    if (bit > 1) throw DomainError("bit value " + std::to_string(bit) + " is not 0/1");
    v = (v << 1) | bit;
  }
  return v;
}

void check_length(std::size_t got, std::size_t streams, std::size_t width, const char* who) {
  if (got != streams * width) {
    throw DimensionError(std::string(who) + ": " + std::to_string(got) + " bits, expected " +
                         std::to_string(streams * width));
  }
}

}  // namespace

std::size_t Constellation::bits_per_symbol() const noexcept {
  return static_cast<std::size_t>(std::countr_zero(order));
}

double Constellation::min_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      best = std::min(best, std::abs(points[i] - points[j]));
  return best;
}

Constellation make_constellation(std::size_t order) {
  Constellation c;
  c.order = order;
  if (order == 2) {
    c.points = {1.0, -1.0};
    c.labels = {0, 1};
  } else if (order == 4 || order == 16 || order == 64) {
    const std::size_t half_bits = static_cast<std::size_t>(std::countr_zero(order)) / 2;
    const std::uint32_t side = 1u << half_bits;
    // Average energy of the unnormalized grid {+-1, +-3, ...}^2 is 2(M-1)/3.
    const double norm = std::sqrt(2.0 * (static_cast<double>(order) - 1.0) / 3.0);
    for (std::uint32_t i = 0; i < side; ++i) {
      for (std::uint32_t q = 0; q < side; ++q) {
        const double re = 2.0 * i - (side - 1.0);
        const double im = 2.0 * q - (side - 1.0);
        c.points.emplace_back(re / norm, im / norm);
        c.labels.push_back((gray(i) << half_bits) | gray(q));
      }
    }
  } else {
    throw DomainError("unsupported modulation order " + std::to_string(order) +
                      " (expected 2, 4, 16 or 64)");
  }
  c.index_of_label.assign(order, 0);
  for (std::size_t i = 0; i < order; ++i) c.index_of_label[c.labels[i]] = i;
  return c;
}

OneHotBlock::OneHotBlock(std::size_t order, std::vector<std::uint32_t> hot)
    : order_(order), hot_(std::move(hot)) {
  for (auto h : hot_) {
    if (h >= order_) throw DomainError("one-hot index " + std::to_string(h) + " >= M");
  }
}

OneHotBlock OneHotBlock::from_dense(std::span<const double> values, std::size_t order,
                                    std::size_t streams) {
  if (values.size() != order * streams) throw DimensionError("one-hot block: wrong size");
  std::vector<std::uint32_t> hot(streams);
  for (std::size_t s = 0; s < streams; ++s) {
    int ones = 0;
    for (std::size_t m = 0; m < order; ++m) {
      const double v = values[s * order + m];
      if (v == 1.0) {
        ++ones;
        hot[s] = static_cast<std::uint32_t>(m);
      } else if (v != 0.0) {
        throw DomainError("one-hot block: entry is neither 0 nor 1");
      }
    }
    if (ones != 1) throw DomainError("one-hot block: stream " + std::to_string(s) + " has " +
                                     std::to_string(ones) + " hot entries");
  }
  return OneHotBlock(order, std::move(hot));
}

std::vector<double> OneHotBlock::dense() const {
  std::vector<double> out(order_ * hot_.size(), 0.0);
  for (std::size_t s = 0; s < hot_.size(); ++s) out[s * order_ + hot_[s]] = 1.0;
  return out;
}

void append_bits(Bits& out, std::uint32_t value, std::size_t width) {
  for (std::size_t b = width; b-- > 0;) out.push_back(static_cast<std::uint8_t>((value >> b) & 1u));
}

OneHotBlock bits_to_onehot(std::span<const std::uint8_t> bits, std::size_t order, std::size_t streams) {
  if (order < 2 || !std::has_single_bit(order)) throw DomainError("M must be a power of two");
  const auto width = static_cast<std::size_t>(std::countr_zero(order));
  check_length(bits.size(), streams, width, "bits_to_onehot");
  std::vector<std::uint32_t> hot(streams);
  for (std::size_t s = 0; s < streams; ++s) hot[s] = group_value(bits, s * width, width);
  return OneHotBlock(order, std::move(hot));
}

Bits onehot_to_bits(const OneHotBlock& block) {
  const auto width = static_cast<std::size_t>(std::countr_zero(block.order()));
  Bits out;
  out.reserve(block.streams() * width);
  for (auto h : block.hot_indices()) append_bits(out, h, width);
  return out;
}

CVector modulate(std::span<const std::uint8_t> bits, const Constellation& c, std::size_t streams) {
  const std::size_t width = c.bits_per_symbol();
  check_length(bits.size(), streams, width, "modulate");
  CVector s(streams);
  for (std::size_t i = 0; i < streams; ++i) s[i] = c.symbol(group_value(bits, i * width, width));
  return s;
}

Bits demodulate_min_distance(std::span<const cdouble> s_hat, const Constellation& c) {
  const std::size_t width = c.bits_per_symbol();
  Bits out;
  out.reserve(s_hat.size() * width);
  for (const cdouble& z : s_hat) {
    std::size_t best = 0;
    double best_d = std::norm(z - c.points[0]);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      const double d = std::norm(z - c.points[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    append_bits(out, c.labels[best], width);
  }
  return out;
}

std::size_t count_bit_errors(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) {
    throw DimensionError("count_bit_errors: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += (a[i] != b[i]);
  return n;
}

}  // namespace rismimo
