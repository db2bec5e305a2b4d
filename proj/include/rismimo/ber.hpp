#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace rismimo {

struct BerPoint {
  double snr_db = 0.0;
  double sigma_e = 0.0;
  std::uint64_t n_bits = 0;
  std::uint64_t n_errors = 0;
  double wall_time_ms = 0.0;
  std::uint64_t skipped = 0;  // trials dropped for rank-deficient designs
  std::string method;
  std::size_t elements = 0;

  [[nodiscard]] double ber() const noexcept {
    return n_bits == 0 ? 0.0 : static_cast<double>(n_errors) / static_cast<double>(n_bits);
  }
};

struct Interval {
  double low;
  double high;
  [[nodiscard]] double half_width() const noexcept { return 0.5 * (high - low); }
};

/// Wilson score interval for a binomial proportion (z = 1.96 gives 95%).
Interval wilson_interval(std::uint64_t errors, std::uint64_t trials, double z = 1.959963984540054);

/// Fewer errors than this at a point flags the estimate as unreliable.
inline constexpr std::uint64_t kMinReliableErrors = 100;

}  // namespace rismimo
