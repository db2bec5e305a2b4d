#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rismimo/channel.hpp"
#include "rismimo/modem.hpp"
#include "rismimo/numerics.hpp"
#include "rismimo/rng.hpp"

namespace rismimo {

/// Precoder/equalizer pair designed on the aggregated channel H^H Theta G.
struct LinkDesign {
  CMatrix precoder;           // F, N_t x N_s, ||F||_F^2 = N_s
  CMatrix equalizer;          // Z, N_s x N_r
  std::vector<double> power;  // p_m, sums to N_s
  SvdFactors svd;             // of the aggregated channel
};

struct PhaseOptReport {
  PhaseConfig theta;
  std::vector<double> objective_trace;  // entry 0 is the initial point
  std::size_t iterations = 0;           // completed sweeps
};

struct PhaseOptOptions {
  std::size_t max_iter = 200;
  double tol = 1e-6;
  /// When false every one of max_iter sweeps runs (fixed-cost benchmarking).
  bool early_stop = true;
};

/// K x K Hermitian matrix with tr(H^H Theta G G^H Theta^H H) = v^H M v,
/// v_k = e^{j theta_k}.  M_kl = (G G^H)_lk (H H^H)_kl.
CMatrix path_gain_matrix(const ChannelPair& csi);

double path_gain_objective(const ChannelPair& csi, const PhaseConfig& theta);
double path_gain_objective(const CMatrix& gain, std::span<const cdouble> v);

/// Cyclic coordinate ascent on the unit-modulus quadratic form: each sweep
/// sets v_k = e^{j arg(sum_{l != k} M_kl v_l)} for k = 0..K-1.
PhaseOptReport optimize_phases(const ChannelPair& csi, const PhaseConfig& initial,
                               const PhaseOptOptions& options = {});
PhaseOptReport optimize_phases(const ChannelPair& csi, Rng& rng, const PhaseOptOptions& options = {});

/// Capacity water-filling over the first `streams` singular values:
/// p_m = max(0, mu - N_s sigma^2 / (P lambda_m^2)), sum p_m = N_s.
std::vector<double> water_filling(std::span<const double> sigma, double power, std::size_t streams,
                                  double sigma2);

/// SVD precoder F = [V]_{1:N_s} P^{1/2} and equalizer Z = (Sigma P^{1/2})^{-1} [U]^H_{1:N_s}.
/// Throws RankDeficiencyError when a stream has lambda <= 1e-12 or zero power.
LinkDesign design_link(const ChannelPair& csi, const PhaseConfig& theta, double power, double sigma2,
                       std::size_t streams);

enum class PhaseMode { optimized, random };

struct ModelBasedConfig {
  std::size_t n_tx = 4;
  std::size_t n_rx = 2;
  std::size_t streams = 2;
  std::size_t elements = 16;
  std::size_t order = 2;
  double power = 4.0;
  double sigma2 = 1.0;
  double sigma_e = 0.0;
  PhaseMode phases = PhaseMode::optimized;
  PhaseOptOptions phase_opt{};
};

struct TrialBits {
  Bits tx;
  Bits rx;
};

/// One symbol vector over one fresh channel: the design uses the estimated
/// channels, transmission uses the true ones.  The equalized vector is
/// rescaled by sqrt(N_s/P) before detection so that s_hat = s + noise.
TrialBits run_modelbased_trial(const ModelBasedConfig& config, const Constellation& constellation,
                               Rng& rng);

}  // namespace rismimo
