#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rismimo/numerics.hpp"
#include "rismimo/rng.hpp"

namespace rismimo {

/// RIS phase angles, each in [-pi, pi].
class PhaseConfig {
 public:
  PhaseConfig() = default;
  explicit PhaseConfig(std::vector<double> theta);

  static PhaseConfig zeros(std::size_t k) { return PhaseConfig(std::vector<double>(k, 0.0)); }
  static PhaseConfig random(std::size_t k, Rng& rng);

  [[nodiscard]] std::size_t size() const noexcept { return theta_.size(); }
  [[nodiscard]] std::span<const double> angles() const noexcept { return theta_; }
  double operator[](std::size_t k) const noexcept { return theta_[k]; }

  /// Unit-modulus reflection coefficients e^{j theta_k}.
  [[nodiscard]] CVector coefficients() const;

  /// Wraps an arbitrary angle into [-pi, pi].
  static double wrap(double angle);

 private:
  std::vector<double> theta_;
};

/// One fading realization: g is transmitter->RIS (K x N_t), h is
/// RIS->receiver (K x N_r).
struct ChannelPair {
  CMatrix g;
  CMatrix h;

  [[nodiscard]] std::size_t elements() const noexcept { return g.rows(); }
  [[nodiscard]] std::size_t tx_antennas() const noexcept { return g.cols(); }
  [[nodiscard]] std::size_t rx_antennas() const noexcept { return h.cols(); }
};

struct CsiModel {
  double sigma_e = 0.0;  // std-dev of each complex error entry
};

struct NoiseModel {
  double sigma2 = 1.0;  // complex noise variance per receive antenna

  /// SNR is P / sigma^2 with sigma^2 per receive antenna.
  static NoiseModel from_snr_db(double power, double snr_db);
};

ChannelPair sample_channels(Rng& rng, std::size_t k, std::size_t n_tx, std::size_t n_rx);

/// Estimated channels G + G_e, H + H_e; i.i.d. CN(0, sigma_e^2) errors.
ChannelPair corrupt_csi(const ChannelPair& truth, const CsiModel& model, Rng& rng);

CMatrix reflection_matrix(const PhaseConfig& theta);

/// H^H Theta G, the N_r x N_t cascaded channel through the surface.
CMatrix effective_channel(const ChannelPair& pair, const PhaseConfig& theta);

/// y = sqrt(P/N_s) H^H Theta G F s + n with fresh CN(0, sigma2 I) noise.
CVector apply_ris_link(std::span<const cdouble> s, const CMatrix& precoder, const ChannelPair& pair,
                       const PhaseConfig& theta, double power, const NoiseModel& noise, Rng& rng);

/// Both sides of the Frobenius-norm feasibility bound for ||H^H Theta G F||_F.
struct FeasibilityCheck {
  double norm;   // ||H^H Theta G F||_F
  double bound;  // sqrt(N_s * sum of eigenvalues of (H^H Theta G)(H^H Theta G)^H)
};
FeasibilityCheck feasibility_bound(const ChannelPair& pair, const PhaseConfig& theta,
                                   const CMatrix& precoder);

}  // namespace rismimo
