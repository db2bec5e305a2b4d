#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rismimo/numerics.hpp"

namespace rismimo {

using Bits = std::vector<std::uint8_t>;

/// Gray-labelled square QAM (or BPSK for M = 2), unit average energy.
///
/// Points are stored in raster order (in-phase level ascending, then
/// quadrature level ascending); `labels[i]` is the integer value of the bit
/// pattern carried by `points[i]`, most significant bit first.
struct Constellation {
  std::size_t order = 0;
  std::vector<cdouble> points;
  std::vector<std::uint32_t> labels;
  std::vector<std::size_t> index_of_label;  // inverse of labels

  [[nodiscard]] std::size_t bits_per_symbol() const noexcept;
  [[nodiscard]] cdouble symbol(std::uint32_t label) const { return points[index_of_label[label]]; }
  [[nodiscard]] double min_distance() const;
};

/// Supported orders: 2, 4, 16, 64.
Constellation make_constellation(std::size_t order);

/// N_s one-hot vectors of length M, stored by hot index.
class OneHotBlock {
 public:
  OneHotBlock(std::size_t order, std::vector<std::uint32_t> hot);

  /// Validates a dense row-major N_s x M block of 0/1 values.
  static OneHotBlock from_dense(std::span<const double> values, std::size_t order,
                                std::size_t streams);

  [[nodiscard]] std::size_t order() const noexcept { return order_; }
  [[nodiscard]] std::size_t streams() const noexcept { return hot_.size(); }
  [[nodiscard]] std::uint32_t hot(std::size_t stream) const { return hot_[stream]; }
  [[nodiscard]] std::span<const std::uint32_t> hot_indices() const noexcept { return hot_; }
  [[nodiscard]] std::vector<double> dense() const;

 private:
  std::size_t order_;
  std::vector<std::uint32_t> hot_;
};

OneHotBlock bits_to_onehot(std::span<const std::uint8_t> bits, std::size_t order, std::size_t streams);
Bits onehot_to_bits(const OneHotBlock& block);

CVector modulate(std::span<const std::uint8_t> bits, const Constellation& c, std::size_t streams);

/// Per-stream nearest point; ties go to the lowest point index.
Bits demodulate_min_distance(std::span<const cdouble> s_hat, const Constellation& c);

std::size_t count_bit_errors(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// Appends the `width` bits of `value`, most significant first.
void append_bits(Bits& out, std::uint32_t value, std::size_t width);

}  // namespace rismimo
