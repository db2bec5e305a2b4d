#include "rismimo/rf_layers.hpp"

#include <cmath>
#include <string>

#include "rismimo/errors.hpp"

namespace rismimo::nn {

namespace {

void check_batch(const Tensor2& x, const Tensor2& theta, std::size_t n_channels, std::size_t k) {
  if (static_cast<std::size_t>(x.rows()) != n_channels ||
      static_cast<std::size_t>(theta.rows()) != n_channels) {
    throw DimensionError("channel layer: batch of " + std::to_string(x.rows()) + " with " +
                         std::to_string(n_channels) + " channel realizations");
  }
  if (static_cast<std::size_t>(theta.cols()) != k) {
    throw DimensionError("channel layer: " + std::to_string(theta.cols()) + " phases for K=" +
                         std::to_string(k));
  }
}

// Per-sample H^H diag(phi) G as N_r x N_t.
CMatrix cascade(const ChannelPair& p, const Tensor2& theta, Eigen::Index row) {
  const std::size_t k = p.elements();
  const std::size_t nr = p.rx_antennas();
  const std::size_t nt = p.tx_antennas();
  CMatrix out(nr, nt);
  for (std::size_t e = 0; e < k; ++e) {
    const cdouble phi = std::polar(1.0, theta(row, static_cast<Eigen::Index>(e)));
    for (std::size_t r = 0; r < nr; ++r) {
      const cdouble hr = std::conj(p.h(e, r)) * phi;
      for (std::size_t t = 0; t < nt; ++t) out(r, t) += hr * p.g(e, t);
    }
  }
  return out;
}

}  // namespace

Tensor2 stack_complex(std::span<const CVector> rows) {
  const Eigen::Index n = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Tensor2 out(static_cast<Eigen::Index>(rows.size()), 2 * n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != n) throw DimensionError("stack_complex: ragged rows");
    stack_into(rows[i], out, static_cast<Eigen::Index>(i));
  }
  return out;
}

void stack_into(std::span<const cdouble> z, Tensor2& out, Eigen::Index row, Eigen::Index col0) {
  const auto n = static_cast<Eigen::Index>(z.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    out(row, col0 + j) = z[static_cast<std::size_t>(j)].real();
    out(row, col0 + n + j) = z[static_cast<std::size_t>(j)].imag();
  }
}

std::vector<CVector> unstack_complex(const Tensor2& stacked) {
  if (stacked.cols() % 2 != 0) throw DimensionError("unstack_complex: odd width");
  const Eigen::Index n = stacked.cols() / 2;
  std::vector<CVector> out(static_cast<std::size_t>(stacked.rows()), CVector(static_cast<std::size_t>(n)));
  for (Eigen::Index i = 0; i < stacked.rows(); ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = {stacked(i, j), stacked(i, n + j)};
  return out;
}

// ---- power normalization ----------------------------------------------------

PowerNormalizeLayer::PowerNormalizeLayer(double power, PowerNormalization mode)
    : power_(power), mode_(mode) {
  if (!(power > 0.0)) throw DomainError("power normalization: P must be > 0");
}

double PowerNormalizeLayer::target_average_power() const noexcept {
  return mode_ == PowerNormalization::paper ? power_ * power_ : power_;
}

double PowerNormalizeLayer::scale_for(double energy, Eigen::Index batch) const {
  if (!(energy > 0.0)) throw DomainError("power normalization: all-zero batch");
  const double level = mode_ == PowerNormalization::paper ? power_ : std::sqrt(power_);
  return level * std::sqrt(static_cast<double>(batch)) / std::sqrt(energy);
}

Tensor2 PowerNormalizeLayer::infer(const Tensor2& x_prime) const {
  return scale_for(x_prime.squaredNorm(), x_prime.rows()) * x_prime;
}

Tensor2 PowerNormalizeLayer::forward(const Tensor2& x_prime) {
  energy_ = x_prime.squaredNorm();
  scale_ = scale_for(energy_, x_prime.rows());
  input_ = x_prime;
  cached_ = true;
  return scale_ * x_prime;
}

Tensor2 PowerNormalizeLayer::backward(const Tensor2& g) {
  if (!cached_) throw StateError("power normalization backward without forward");
  if (g.rows() != input_.rows() || g.cols() != input_.cols()) {
    throw DimensionError("power normalization backward: shape mismatch");
  }
  // x = c x', c = level sqrt(B) S^{-1/2}, dc/dx' = -c x' / S.
  const double proj = (g.array() * input_.array()).sum();
  return scale_ * g - (scale_ * proj / energy_) * input_;
}

Tensor2 power_normalize(const Tensor2& x_prime, double power, PowerNormalization mode) {
  return PowerNormalizeLayer(power, mode).infer(x_prime);
}

// ---- physical channel -------------------------------------------------------

Tensor2 ChannelLayer::apply(const Tensor2& x, const Tensor2& theta, std::span<const ChannelPair> channels,
                            double gain, double sigma2, Rng* noise) {
  if (channels.empty()) throw DimensionError("channel layer: no channels");
  const std::size_t nt = channels.front().tx_antennas();
  const std::size_t nr = channels.front().rx_antennas();
  check_batch(x, theta, channels.size(), channels.front().elements());
  if (static_cast<std::size_t>(x.cols()) != 2 * nt) throw DimensionError("channel layer: x width != 2N_t");
  Tensor2 y(x.rows(), static_cast<Eigen::Index>(2 * nr));
  const auto ent = static_cast<Eigen::Index>(nt);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const ChannelPair& p = channels[static_cast<std::size_t>(i)];
    if (p.tx_antennas() != nt || p.rx_antennas() != nr) throw DimensionError("channel layer: mixed dims");
    const CMatrix a = cascade(p, theta, i);
    for (std::size_t r = 0; r < nr; ++r) {
      cdouble acc = 0.0;
      for (std::size_t t = 0; t < nt; ++t) {
        const auto c = static_cast<Eigen::Index>(t);
        acc += a(r, t) * cdouble(x(i, c), x(i, ent + c));
      }
      acc *= gain;
      if (noise != nullptr && sigma2 > 0.0) acc += noise->complex_normal(sigma2);
      y(i, static_cast<Eigen::Index>(r)) = acc.real();
      y(i, static_cast<Eigen::Index>(nr + r)) = acc.imag();
    }
  }
  return y;
}

Tensor2 ChannelLayer::forward(const Tensor2& x, const Tensor2& theta, std::span<const ChannelPair> channels,
                              double gain, double sigma2, Rng* noise) {
  Tensor2 y = apply(x, theta, channels, gain, sigma2, noise);
  x_ = x;
  theta_ = theta;
  channels_ = channels;
  gain_ = gain;
  return y;
}

ChannelLayer::Grad ChannelLayer::backward(const Tensor2& grad_y) const {
  if (channels_.empty()) throw StateError("channel layer backward without forward");
  const std::size_t nt = channels_.front().tx_antennas();
  const std::size_t nr = channels_.front().rx_antennas();
  const std::size_t k = channels_.front().elements();
  if (grad_y.rows() != x_.rows() || static_cast<std::size_t>(grad_y.cols()) != 2 * nr) {
    throw DimensionError("channel layer backward: gradient shape mismatch");
  }
  const auto ent = static_cast<Eigen::Index>(nt);
  const auto enr = static_cast<Eigen::Index>(nr);
  Grad out{Tensor2::Zero(x_.rows(), x_.cols()), Tensor2::Zero(theta_.rows(), theta_.cols())};
  CVector gy(nr);
  CVector gx(nt);
  CVector xi(nt);
  for (Eigen::Index i = 0; i < x_.rows(); ++i) {
    const ChannelPair& p = channels_[static_cast<std::size_t>(i)];
    for (std::size_t r = 0; r < nr; ++r) {
      const auto c = static_cast<Eigen::Index>(r);
      gy[r] = {grad_y(i, c), grad_y(i, enr + c)};
    }
    for (std::size_t t = 0; t < nt; ++t) {
      const auto c = static_cast<Eigen::Index>(t);
      xi[t] = {x_(i, c), x_(i, ent + c)};
    }
    std::fill(gx.begin(), gx.end(), cdouble{0.0, 0.0});
    for (std::size_t e = 0; e < k; ++e) {
      const cdouble phi = std::polar(1.0, theta_(i, static_cast<Eigen::Index>(e)));
      // w = sum_r conj(gy_r) conj(H_er): the adjoint of gy through H^H.
      cdouble hg = 0.0;  // sum_r H_er gy_r, used for the x-gradient
      cdouble w = 0.0;
      for (std::size_t r = 0; r < nr; ++r) {
        hg += p.h(e, r) * gy[r];
        w += std::conj(gy[r]) * std::conj(p.h(e, r));
      }
      cdouble gx_e = 0.0;  // (G x)_e
      for (std::size_t t = 0; t < nt; ++t) {
        gx_e += p.g(e, t) * xi[t];
        // A^H gy = G^H conj(Theta) H gy
        gx[t] += std::conj(p.g(e, t)) * std::conj(phi) * hg;
      }
      const cdouble dy = gain_ * cdouble(0.0, 1.0) * phi * gx_e;
      out.theta(i, static_cast<Eigen::Index>(e)) = (w * dy).real();
    }
    for (std::size_t t = 0; t < nt; ++t) {
      const auto c = static_cast<Eigen::Index>(t);
      out.x(i, c) = gain_ * gx[t].real();
      out.x(i, ent + c) = gain_ * gx[t].imag();
    }
  }
  return out;
}

// ---- estimated cascade ------------------------------------------------------

Tensor2 CascadeLayer::apply(const Tensor2& theta, std::span<const ChannelPair> estimates) {
  if (estimates.empty()) throw DimensionError("cascade layer: no channels");
  if (static_cast<std::size_t>(theta.rows()) != estimates.size()) {
    throw DimensionError("cascade layer: batch/channel count mismatch");
  }
  const std::size_t nt = estimates.front().tx_antennas();
  const std::size_t nr = estimates.front().rx_antennas();
  if (static_cast<std::size_t>(theta.cols()) != estimates.front().elements()) {
    throw DimensionError("cascade layer: phase count != K");
  }
  Tensor2 out(theta.rows(), static_cast<Eigen::Index>(2 * nr * nt));
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    const CMatrix a = cascade(estimates[static_cast<std::size_t>(i)], theta, i);
    stack_into(a.entries(), out, i);
  }
  return out;
}

Tensor2 CascadeLayer::forward(const Tensor2& theta, std::span<const ChannelPair> estimates) {
  Tensor2 out = apply(theta, estimates);
  theta_ = theta;
  estimates_ = estimates;
  return out;
}

Tensor2 CascadeLayer::backward(const Tensor2& grad_out) const {
  if (estimates_.empty()) throw StateError("cascade layer backward without forward");
  const std::size_t nt = estimates_.front().tx_antennas();
  const std::size_t nr = estimates_.front().rx_antennas();
  const std::size_t k = estimates_.front().elements();
  const auto n = static_cast<Eigen::Index>(nr * nt);
  if (grad_out.rows() != theta_.rows() || grad_out.cols() != 2 * n) {
    throw DimensionError("cascade layer backward: gradient shape mismatch");
  }
  Tensor2 g = Tensor2::Zero(theta_.rows(), theta_.cols());
  for (Eigen::Index i = 0; i < theta_.rows(); ++i) {
    const ChannelPair& p = estimates_[static_cast<std::size_t>(i)];
    for (std::size_t e = 0; e < k; ++e) {
      const cdouble dphi = cdouble(0.0, 1.0) * std::polar(1.0, theta_(i, static_cast<Eigen::Index>(e)));
      cdouble acc = 0.0;
      for (std::size_t r = 0; r < nr; ++r) {
        const cdouble hr = std::conj(p.h(e, r)) * dphi;
        for (std::size_t t = 0; t < nt; ++t) {
          const auto c = static_cast<Eigen::Index>(r * nt + t);
          const cdouble go(grad_out(i, c), grad_out(i, n + c));
          acc += std::conj(go) * hr * p.g(e, t);
        }
      }
      g(i, static_cast<Eigen::Index>(e)) = acc.real();
    }
  }
  return g;
}

}  // namespace rismimo::nn
