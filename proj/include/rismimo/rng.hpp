#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace rismimo {

/// Seeded random stream with independently derivable sub-streams.
///
/// A stream is identified by a 64-bit key. `substream(i)` derives a child key
/// from the parent key and `i` only, never from how many draws the parent has
/// made, so trial `i` of a Monte Carlo run sees the same numbers whether the
/// trials run serially, in parallel, or in a different order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed)), engine_(key_) {}

  [[nodiscard]] Rng substream(std::uint64_t id) const {
    Rng child(0);
    child.key_ = mix(key_ ^ mix(id + 0x9e3779b97f4a7c15ULL));
    child.engine_.seed(child.key_);
    return child;
  }

  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  double normal() { return normal_(engine_); }

  /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> complex_normal(double variance = 1.0) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {s * re, s * im};
  }

  std::uint8_t bit() { return static_cast<std::uint8_t>(engine_() >> 63); }

  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  // splitmix64 finalizer
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rismimo
