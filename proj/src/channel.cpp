#include "rismimo/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rismimo/errors.hpp"

namespace rismimo {

namespace {

void check_pair(const ChannelPair& pair) {
  if (pair.g.rows() != pair.h.rows()) {
    throw DimensionError("channel pair: G has " + std::to_string(pair.g.rows()) +
                         " RIS rows, H has " + std::to_string(pair.h.rows()));
  }
}

CMatrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double variance) {
  CMatrix out(rows, cols);
  for (auto& z : out.entries()) z = rng.complex_normal(variance);
  return out;
}

}  // namespace

PhaseConfig::PhaseConfig(std::vector<double> theta) : theta_(std::move(theta)) {
  for (double t : theta_) {
    if (!(t >= -std::numbers::pi && t <= std::numbers::pi)) {
      throw DomainError("phase " + std::to_string(t) + " outside [-pi, pi]");
    }
  }
}

PhaseConfig PhaseConfig::random(std::size_t k, Rng& rng) {
  std::vector<double> theta(k);
  for (auto& t : theta) t = rng.uniform(-std::numbers::pi, std::numbers::pi);
  return PhaseConfig(std::move(theta));
}

CVector PhaseConfig::coefficients() const {
  CVector out(theta_.size());
  for (std::size_t k = 0; k < theta_.size(); ++k) out[k] = std::polar(1.0, theta_[k]);
  return out;
}

double PhaseConfig::wrap(double angle) {
  double w = std::remainder(angle, 2.0 * std::numbers::pi);
  if (w < -std::numbers::pi) w = -std::numbers::pi;
  if (w > std::numbers::pi) w = std::numbers::pi;
  return w;
}

NoiseModel NoiseModel::from_snr_db(double power, double snr_db) {
  return NoiseModel{power / std::pow(10.0, snr_db / 10.0)};
}

ChannelPair sample_channels(Rng& rng, std::size_t k, std::size_t n_tx, std::size_t n_rx) {
  if (k == 0 || n_tx == 0 || n_rx == 0) throw DimensionError("sample_channels: zero dimension");
  ChannelPair pair;
  pair.g = gaussian_matrix(rng, k, n_tx, 1.0);
  pair.h = gaussian_matrix(rng, k, n_rx, 1.0);
  return pair;
}

ChannelPair corrupt_csi(const ChannelPair& truth, const CsiModel& model, Rng& rng) {
  if (!(model.sigma_e >= 0.0) || !std::isfinite(model.sigma_e)) {
    throw DomainError("sigma_e must be finite and non-negative");
  }
  if (model.sigma_e == 0.0) return truth;
  const double var = model.sigma_e * model.sigma_e;
  ChannelPair est = truth;
  for (auto& z : est.h.entries()) z += rng.complex_normal(var);
  for (auto& z : est.g.entries()) z += rng.complex_normal(var);
  return est;
}

CMatrix reflection_matrix(const PhaseConfig& theta) {
  const CVector c = theta.coefficients();
  return CMatrix::diagonal(c);
}

CMatrix effective_channel(const ChannelPair& pair, const PhaseConfig& theta) {
  check_pair(pair);
  const std::size_t k = pair.elements();
  if (theta.size() != k) {
    throw DimensionError("effective_channel: " + std::to_string(theta.size()) + " phases for " +
                         std::to_string(k) + " elements");
  }
  const std::size_t nr = pair.rx_antennas();
  const std::size_t nt = pair.tx_antennas();
  const CVector phi = theta.coefficients();
  CMatrix out(nr, nt);
  for (std::size_t e = 0; e < k; ++e) {
    for (std::size_t r = 0; r < nr; ++r) {
      const cdouble hr = std::conj(pair.h(e, r)) * phi[e];
      for (std::size_t t = 0; t < nt; ++t) out(r, t) += hr * pair.g(e, t);
    }
  }
  return out;
}

CVector apply_ris_link(std::span<const cdouble> s, const CMatrix& precoder, const ChannelPair& pair,
                       const PhaseConfig& theta, double power, const NoiseModel& noise, Rng& rng) {
  if (precoder.cols() != s.size()) {
    throw DimensionError("apply_ris_link: precoder has " + std::to_string(precoder.cols()) +
                         " columns for " + std::to_string(s.size()) + " streams");
  }
  if (precoder.rows() != pair.tx_antennas()) {
    throw DimensionError("apply_ris_link: precoder rows do not match N_t");
  }
  const double fro2 = std::pow(frobenius_norm(precoder), 2);
  const double ns = static_cast<double>(s.size());
  if (std::abs(fro2 - ns) > 1e-9 * std::max(1.0, ns)) {
    throw DomainError("apply_ris_link: ||F||_F^2 = " + std::to_string(fro2) + ", expected N_s");
  }
  const CMatrix heff = effective_channel(pair, theta);
  const CVector x = matvec(precoder, s);
  CVector y = matvec(heff, x);
  const double gain = std::sqrt(power / ns);
  for (auto& v : y) v = gain * v + rng.complex_normal(noise.sigma2);
  return y;
}

FeasibilityCheck feasibility_bound(const ChannelPair& pair, const PhaseConfig& theta,
                                   const CMatrix& precoder) {
  const CMatrix heff = effective_channel(pair, theta);
  const CMatrix prod = matmul(heff, precoder);
  // Sum of eigenvalues of heff heff^H equals its trace, i.e. ||heff||_F^2.
  const double eig_sum = std::pow(frobenius_norm(heff), 2);
  return FeasibilityCheck{frobenius_norm(prod),
                          std::sqrt(static_cast<double>(precoder.cols()) * eig_sum)};
}

}  // namespace rismimo
