#include "rismimo/neuralnet.hpp"

#include <cmath>
#include <string>

#include "rismimo/errors.hpp"

namespace rismimo::nn {

namespace {

template <typename Derived>
std::span<double> flat(Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
template <typename Derived>
std::span<const double> flat(const Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

void check_width(const Tensor2& x, std::size_t want, const char* who) {
  if (static_cast<std::size_t>(x.cols()) != want) {
    throw DimensionError(std::string(who) + ": input width " + std::to_string(x.cols()) +
                         ", expected " + std::to_string(want));
  }
}

DenseLayer gaussian_dense(std::size_t in, std::size_t out, double stddev, Rng& rng) {
  DenseLayer layer(in, out);
  for (Eigen::Index i = 0; i < layer.weights().size(); ++i) {
    layer.weights().data()[i] = stddev * rng.normal();
  }
  return layer;
}

}  // namespace

// ---- dense ------------------------------------------------------------------

DenseLayer::DenseLayer(std::size_t in, std::size_t out)
    : w_(Tensor2::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in))),
      b_(RowVec::Zero(static_cast<Eigen::Index>(out))),
      dw_(Tensor2::Zero(w_.rows(), w_.cols())),
      db_(RowVec::Zero(b_.size())) {}

DenseLayer DenseLayer::he(std::size_t in, std::size_t out, Rng& rng) {
  return gaussian_dense(in, out, std::sqrt(2.0 / static_cast<double>(in)), rng);
}

DenseLayer DenseLayer::glorot(std::size_t in, std::size_t out, Rng& rng) {
  return gaussian_dense(in, out, std::sqrt(2.0 / static_cast<double>(in + out)), rng);
}

DenseLayer DenseLayer::fan_in_uniform(std::size_t in, std::size_t out, Rng& rng) {
  DenseLayer layer(in, out);
  const double a = 1.0 / std::sqrt(static_cast<double>(in));
  for (Eigen::Index i = 0; i < layer.weights().size(); ++i) layer.weights().data()[i] = rng.uniform(-a, a);
  for (Eigen::Index i = 0; i < layer.bias().size(); ++i) layer.bias()[i] = rng.uniform(-a, a);
  return layer;
}

Tensor2 DenseLayer::infer(const Tensor2& x) const {
  check_width(x, in(), "dense");
  Tensor2 y = x * w_.transpose();
  y.rowwise() += b_;
  return y;
}

Tensor2 DenseLayer::forward(const Tensor2& x) {
  Tensor2 y = infer(x);
  input_ = x;
  return y;
}

Tensor2 DenseLayer::backward(const Tensor2& grad_out) {
  if (!input_) throw StateError("dense backward without forward");
  if (grad_out.rows() != input_->rows() || static_cast<std::size_t>(grad_out.cols()) != out()) {
    throw DimensionError("dense backward: gradient shape mismatch");
  }
  dw_.noalias() = grad_out.transpose() * *input_;
  db_ = grad_out.colwise().sum();
  return grad_out * w_;
}

void DenseLayer::collect(std::vector<ParamView>& out) {
  out.push_back({flat(w_), flat(dw_)});
  out.push_back({flat(b_), flat(db_)});
}

// ---- batch norm -------------------------------------------------------------

BatchNormLayer::BatchNormLayer(std::size_t features, double momentum, double epsilon)
    : gamma_(RowVec::Ones(static_cast<Eigen::Index>(features))),
      beta_(RowVec::Zero(static_cast<Eigen::Index>(features))),
      running_mean_(RowVec::Zero(static_cast<Eigen::Index>(features))),
      running_var_(RowVec::Ones(static_cast<Eigen::Index>(features))),
      dgamma_(RowVec::Zero(static_cast<Eigen::Index>(features))),
      dbeta_(RowVec::Zero(static_cast<Eigen::Index>(features))),
      momentum_(momentum),
      epsilon_(epsilon) {
  if (!(momentum > 0.0 && momentum < 1.0)) throw DomainError("batch norm momentum must be in (0,1)");
  if (!(epsilon > 0.0)) throw DomainError("batch norm epsilon must be > 0");
}

Tensor2 BatchNormLayer::infer(const Tensor2& x) const {
  check_width(x, features(), "batch norm");
  const RowVec scale = gamma_.array() / (running_var_.array() + epsilon_).sqrt();
  Tensor2 y = (x.rowwise() - running_mean_).array().rowwise() * scale.array();
  y.rowwise() += beta_;
  return y;
}

Tensor2 BatchNormLayer::forward(const Tensor2& x, Mode mode) {
  check_width(x, features(), "batch norm");
  last_mode_ = mode;
  if (mode == Mode::inference) {
    inv_std_ = (running_var_.array() + epsilon_).rsqrt();
    xhat_ = (x.rowwise() - running_mean_).array().rowwise() * inv_std_.array();
  } else {
    const Eigen::Index b = x.rows();
    if (b < 2) throw DomainError("batch norm training needs a batch of at least 2");
    const RowVec mean = x.colwise().mean();
    Tensor2 centered = x.rowwise() - mean;
    const RowVec var = centered.array().square().colwise().sum() / static_cast<double>(b);
    inv_std_ = (var.array() + epsilon_).rsqrt();
    xhat_ = centered.array().rowwise() * inv_std_.array();
    const double unbias = static_cast<double>(b) / static_cast<double>(b - 1);
    running_mean_ = (1.0 - momentum_) * running_mean_ + momentum_ * mean;
    running_var_ = (1.0 - momentum_) * running_var_ + momentum_ * unbias * var;
  }
  Tensor2 y = xhat_.array().rowwise() * gamma_.array();
  y.rowwise() += beta_;
  return y;
}

Tensor2 BatchNormLayer::backward(const Tensor2& g) {
  if (!last_mode_) throw StateError("batch norm backward without forward");
  if (g.rows() != xhat_.rows() || g.cols() != xhat_.cols()) {
    throw DimensionError("batch norm backward: gradient shape mismatch");
  }
  dbeta_ = g.colwise().sum();
  dgamma_ = (g.array() * xhat_.array()).colwise().sum();
  const RowVec scale = gamma_.array() * inv_std_.array();
  if (*last_mode_ == Mode::inference) {
    return g.array().rowwise() * scale.array();
  }
  // dx = gamma inv_std / B (B g - sum g - xhat sum(g xhat))
  const double b = static_cast<double>(g.rows());
  Tensor2 dx = (b * g).rowwise() - dbeta_;
  dx.array() -= xhat_.array().rowwise() * dgamma_.array();
  dx.array().rowwise() *= (scale / b).array();
  return dx;
}

void BatchNormLayer::collect(std::vector<ParamView>& out) {
  out.push_back({flat(gamma_), flat(dgamma_)});
  out.push_back({flat(beta_), flat(dbeta_)});
}

// ---- activations ------------------------------------------------------------

Tensor2 relu(const Tensor2& x) { return x.cwiseMax(0.0); }

Tensor2 sigmoid(const Tensor2& x) { return (1.0 + (-x.array()).exp()).inverse().matrix(); }

Tensor2 ReluLayer::infer(const Tensor2& x) const { return relu(x); }

Tensor2 ReluLayer::forward(const Tensor2& x) {
  input_ = x;
  return relu(x);
}

Tensor2 ReluLayer::backward(const Tensor2& grad_out) {
  if (!input_) throw StateError("relu backward without forward");
  return (input_->array() > 0.0).select(grad_out, 0.0);
}

Tensor2 SigmoidLayer::infer(const Tensor2& x) const { return sigmoid(x); }

Tensor2 SigmoidLayer::forward(const Tensor2& x) {
  output_ = sigmoid(x);
  return *output_;
}

Tensor2 SigmoidLayer::backward(const Tensor2& grad_out) {
  if (!output_) throw StateError("sigmoid backward without forward");
  return (grad_out.array() * output_->array() * (1.0 - output_->array())).matrix();
}

// ---- mlp --------------------------------------------------------------------

Tensor2 Mlp::forward(const Tensor2& x) {
  Tensor2 h = x;
  for (auto& layer : layers_) {
    h = std::visit(
        [&](auto& l) -> Tensor2 {
          if constexpr (std::is_same_v<std::decay_t<decltype(l)>, BatchNormLayer>) {
            return l.forward(h, mode_);
          } else {
            return l.forward(h);
          }
        },
        layer);
  }
  return h;
}

Tensor2 Mlp::infer(const Tensor2& x) const {
  Tensor2 h = x;
  for (const auto& layer : layers_) {
    h = std::visit([&](const auto& l) { return l.infer(h); }, layer);
  }
  return h;
}

Tensor2 Mlp::backward(const Tensor2& grad_out) {
  Tensor2 g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    g = std::visit([&](auto& l) { return l.backward(g); }, *it);
  }
  return g;
}

std::vector<ParamView> Mlp::parameters() {
  std::vector<ParamView> out;
  for (auto& layer : layers_) {
    std::visit(
        [&](auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, DenseLayer> || std::is_same_v<T, BatchNormLayer>) {
            l.collect(out);
          }
        },
        layer);
  }
  return out;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) n += d->in() * d->out() + d->out();
    if (const auto* b = std::get_if<BatchNormLayer>(&layer)) n += 2 * b->features();
  }
  return n;
}

std::vector<std::size_t> Mlp::dense_widths() const {
  std::vector<std::size_t> out;
  for (const auto& layer : layers_) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) out.push_back(d->out());
  }
  return out;
}

// ---- loss -------------------------------------------------------------------

LossAndGrad softmax_cross_entropy(const Tensor2& logits, std::span<const std::uint32_t> targets) {
  const Eigen::Index b = logits.rows();
  const Eigen::Index m = logits.cols();
  if (static_cast<std::size_t>(b) != targets.size()) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                         " targets for batch " + std::to_string(b));
  }
  if (b == 0) throw DimensionError("softmax_cross_entropy: empty batch");
  LossAndGrad out{0.0, Tensor2(b, m)};
  for (Eigen::Index i = 0; i < b; ++i) {
    const std::uint32_t t = targets[static_cast<std::size_t>(i)];
    if (t >= static_cast<std::uint32_t>(m)) throw DomainError("softmax_cross_entropy: target out of range");
    const double peak = logits.row(i).maxCoeff();
    double z = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) z += std::exp(logits(i, j) - peak);
    const double log_z = peak + std::log(z);
    out.loss -= logits(i, t) - log_z;
    for (Eigen::Index j = 0; j < m; ++j) out.grad(i, j) = std::exp(logits(i, j) - log_z);
    out.grad(i, t) -= 1.0;
  }
  const double inv_b = 1.0 / static_cast<double>(b);
  out.loss *= inv_b;
  out.grad *= inv_b;
  return out;
}

LossAndGrad softmax_cross_entropy(const Tensor2& logits, const Tensor2& onehot_targets) {
  if (onehot_targets.rows() != logits.rows() || onehot_targets.cols() != logits.cols()) {
    throw DimensionError("softmax_cross_entropy: target shape mismatch");
  }
  std::vector<std::uint32_t> hot(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < onehot_targets.rows(); ++i) {
    int ones = 0;
    for (Eigen::Index j = 0; j < onehot_targets.cols(); ++j) {
      const double v = onehot_targets(i, j);
      if (v == 1.0) {
        ++ones;
        hot[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(j);
      } else if (v != 0.0) {
        throw DomainError("softmax_cross_entropy: target is not one-hot");
      }
    }
    if (ones != 1) throw DomainError("softmax_cross_entropy: target is not one-hot");
  }
  return softmax_cross_entropy(logits, hot);
}

// ---- adam -------------------------------------------------------------------

void adam_step(AdamState& state, std::span<const ParamView> params) {
  if (state.first.empty()) {
    for (const auto& p : params) {
      state.first.emplace_back(p.value.size(), 0.0);
      state.second.emplace_back(p.value.size(), 0.0);
    }
  }
  if (state.first.size() != params.size()) throw DimensionError("adam_step: parameter list changed");
  const AdamConfig& c = state.config;
  ++state.step;
  const double corr1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (p.value.size() != p.grad.size() || p.value.size() != state.first[i].size()) {
      throw DimensionError("adam_step: shape mismatch for parameter " + std::to_string(i));
    }
    double* m = state.first[i].data();
    double* v = state.second[i].data();
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
      p.value[j] -= c.lr * (m[j] / corr1) / (std::sqrt(v[j] / corr2) + c.eps);
    }
  }
}

}  // namespace rismimo::nn
