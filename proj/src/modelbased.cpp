#include "rismimo/modelbased.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rismimo/errors.hpp"

namespace rismimo {

namespace {

CMatrix gram(const CMatrix& a) {  // a a^H
  CMatrix out(a.rows(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = i; j < a.rows(); ++j) {
      cdouble acc = 0.0;
      for (std::size_t c = 0; c < a.cols(); ++c) acc += a(i, c) * std::conj(a(j, c));
      out(i, j) = acc;
      out(j, i) = std::conj(acc);
    }
  }
  return out;
}

}  // namespace

CMatrix path_gain_matrix(const ChannelPair& csi) {
  if (csi.g.rows() != csi.h.rows()) throw DimensionError("path_gain_matrix: G and H disagree on K");
  const CMatrix gg = gram(csi.g);
  const CMatrix hh = gram(csi.h);
  const std::size_t k = csi.elements();
  CMatrix m(k, k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) m(a, b) = gg(b, a) * hh(a, b);
  return m;
}

double path_gain_objective(const CMatrix& gain, std::span<const cdouble> v) {
  if (gain.rows() != v.size() || gain.cols() != v.size()) {
    throw DimensionError("path_gain_objective: matrix/phase size mismatch");
  }
  cdouble acc = 0.0;
  for (std::size_t a = 0; a < v.size(); ++a) {
    cdouble row = 0.0;
    for (std::size_t b = 0; b < v.size(); ++b) row += gain(a, b) * v[b];
    acc += std::conj(v[a]) * row;
  }
  return acc.real();
}

double path_gain_objective(const ChannelPair& csi, const PhaseConfig& theta) {
  if (theta.size() != csi.elements()) throw DimensionError("path_gain_objective: wrong phase count");
  const CVector v = theta.coefficients();
  return path_gain_objective(path_gain_matrix(csi), v);
}

PhaseOptReport optimize_phases(const ChannelPair& csi, const PhaseConfig& initial,
                               const PhaseOptOptions& options) {
  if (options.max_iter < 1) throw DomainError("optimize_phases: max_iter must be >= 1");
  if (options.early_stop && !(options.tol > 0.0)) throw DomainError("optimize_phases: tol must be > 0");
  const std::size_t k = csi.elements();
  if (initial.size() != k) throw DimensionError("optimize_phases: initial phase count != K");

  const CMatrix m = path_gain_matrix(csi);
  CVector v = initial.coefficients();
  CVector u(k, 0.0);  // u = M v
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) u[a] += m(a, b) * v[b];

  PhaseOptReport report;
  double prev = path_gain_objective(m, v);
  report.objective_trace.push_back(prev);
  for (std::size_t it = 0; it < options.max_iter; ++it) {
    for (std::size_t e = 0; e < k; ++e) {
      const cdouble s = u[e] - m(e, e) * v[e];
      const double mag = std::abs(s);
      if (mag == 0.0) continue;
      const cdouble next = s / mag;
      const cdouble delta = next - v[e];
      v[e] = next;
      for (std::size_t a = 0; a < k; ++a) u[a] += m(a, e) * delta;
    }
    const double cur = path_gain_objective(m, v);
    report.objective_trace.push_back(cur);
    report.iterations = it + 1;
    if (options.early_stop && (cur - prev) < options.tol * std::abs(prev)) break;
    prev = cur;
  }

  std::vector<double> theta(k);
  for (std::size_t e = 0; e < k; ++e) theta[e] = std::arg(v[e]);
  report.theta = PhaseConfig(std::move(theta));
  return report;
}

PhaseOptReport optimize_phases(const ChannelPair& csi, Rng& rng, const PhaseOptOptions& options) {
  return optimize_phases(csi, PhaseConfig::random(csi.elements(), rng), options);
}

std::vector<double> water_filling(std::span<const double> sigma, double power, std::size_t streams,
                                  double sigma2) {
  if (streams == 0) throw DomainError("water_filling: zero streams");
  if (sigma.size() < streams) throw DimensionError("water_filling: fewer singular values than streams");
  if (!(power > 0.0) || !(sigma2 >= 0.0)) throw DomainError("water_filling: P must be > 0, sigma2 >= 0");
  const double ns = static_cast<double>(streams);
  constexpr double inf = std::numeric_limits<double>::infinity();

  // Water level offsets a_m = N_s sigma^2 / (P lambda_m^2).
  std::vector<double> floor(streams);
  double max_finite = 0.0;
  bool any = false;
  for (std::size_t m = 0; m < streams; ++m) {
    const double lam2 = sigma[m] * sigma[m];
    if (lam2 > 0.0) {
      floor[m] = ns * sigma2 / (power * lam2);
      max_finite = std::max(max_finite, floor[m]);
      any = true;
    } else {
      floor[m] = inf;
    }
  }
  if (!any) throw RankDeficiencyError("water_filling: all singular values are zero");

  auto fill = [&](double mu) {
    double total = 0.0;
    for (double a : floor) total += std::max(0.0, mu - a);
    return total;
  };
  double lo = 0.0;
  double hi = ns + max_finite;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (fill(mid) > ns ? hi : lo) = mid;
  }
  double mu = 0.5 * (lo + hi);

  // Closed-form level on the active set removes the bisection residue.
  double active_sum = 0.0;
  std::size_t active = 0;
  for (double a : floor) {
    if (a < mu) {
      active_sum += a;
      ++active;
    }
  }
  if (active > 0) {
    const double exact = (ns + active_sum) / static_cast<double>(active);
    bool consistent = true;
    for (double a : floor) consistent = consistent && ((a < mu) == (a < exact));
    if (consistent) mu = exact;
  }

  std::vector<double> p(streams);
  for (std::size_t m = 0; m < streams; ++m) p[m] = std::max(0.0, mu - floor[m]);
  return p;
}

LinkDesign design_link(const ChannelPair& csi, const PhaseConfig& theta, double power, double sigma2,
                       std::size_t streams) {
  if (streams == 0 || streams > std::min(csi.tx_antennas(), csi.rx_antennas())) {
    throw DimensionError("design_link: N_s=" + std::to_string(streams) +
                         " exceeds min(N_t, N_r)");
  }
  LinkDesign d;
  d.svd = svd(effective_channel(csi, theta));
  if (d.svd.sigma[streams - 1] <= 1e-12) {
    throw RankDeficiencyError("design_link: aggregated channel has rank < N_s");
  }
  d.power = water_filling(d.svd.sigma, power, streams, sigma2);
  for (std::size_t m = 0; m < streams; ++m) {
    if (d.power[m] <= 0.0) {
      throw RankDeficiencyError("design_link: water-filling gave stream " + std::to_string(m) +
                                " zero power");
    }
  }
  const std::size_t nt = csi.tx_antennas();
  const std::size_t nr = csi.rx_antennas();
  d.precoder = CMatrix(nt, streams);
  d.equalizer = CMatrix(streams, nr);
  for (std::size_t m = 0; m < streams; ++m) {
    const double amp = std::sqrt(d.power[m]);
    for (std::size_t t = 0; t < nt; ++t) d.precoder(t, m) = d.svd.V(t, m) * amp;
    const double inv = 1.0 / (d.svd.sigma[m] * amp);
    for (std::size_t r = 0; r < nr; ++r) d.equalizer(m, r) = std::conj(d.svd.U(r, m)) * inv;
  }
  return d;
}

TrialBits run_modelbased_trial(const ModelBasedConfig& cfg, const Constellation& constellation,
                               Rng& rng) {
  const ChannelPair truth = sample_channels(rng, cfg.elements, cfg.n_tx, cfg.n_rx);
  const ChannelPair estimate = corrupt_csi(truth, CsiModel{cfg.sigma_e}, rng);

  PhaseConfig theta = cfg.phases == PhaseMode::optimized
                          ? optimize_phases(estimate, rng, cfg.phase_opt).theta
                          : PhaseConfig::random(cfg.elements, rng);
  const LinkDesign design = design_link(estimate, theta, cfg.power, cfg.sigma2, cfg.streams);

  TrialBits out;
  const std::size_t nbits = cfg.streams * constellation.bits_per_symbol();
  out.tx.resize(nbits);
  for (auto& b : out.tx) b = rng.bit();
  const CVector s = modulate(out.tx, constellation, cfg.streams);
  const CVector y = apply_ris_link(s, design.precoder, truth, theta, cfg.power,
                                   NoiseModel{cfg.sigma2}, rng);
  CVector s_hat = matvec(design.equalizer, y);
  const double rescale = std::sqrt(static_cast<double>(cfg.streams) / cfg.power);
  for (auto& z : s_hat) z *= rescale;
  out.rx = demodulate_min_distance(s_hat, constellation);
  return out;
}

}  // namespace rismimo
