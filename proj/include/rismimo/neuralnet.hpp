#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "rismimo/rng.hpp"

namespace rismimo::nn {

/// Batch x width activations; one sample per row.
using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::RowVectorXd;

enum class Mode { training, inference };

/// A trainable array and its gradient, viewed flat.
struct ParamView {
  std::span<double> value;
  std::span<const double> grad;
};

class DenseLayer {
 public:
  DenseLayer(std::size_t in, std::size_t out);

  /// He-scaled Gaussian weights (for layers feeding ReLU), zero bias.
  static DenseLayer he(std::size_t in, std::size_t out, Rng& rng);
  /// Glorot-scaled Gaussian weights (output layers), zero bias.
  static DenseLayer glorot(std::size_t in, std::size_t out, Rng& rng);
  /// Weights and bias uniform in +-1/sqrt(in); keeps untrained logits small.
  static DenseLayer fan_in_uniform(std::size_t in, std::size_t out, Rng& rng);

  Tensor2 forward(const Tensor2& x);
  [[nodiscard]] Tensor2 infer(const Tensor2& x) const;
  /// Gradient w.r.t. the input; parameter gradients are stored on the layer.
  Tensor2 backward(const Tensor2& grad_out);

  [[nodiscard]] std::size_t in() const noexcept { return static_cast<std::size_t>(w_.cols()); }
  [[nodiscard]] std::size_t out() const noexcept { return static_cast<std::size_t>(w_.rows()); }

  Tensor2& weights() noexcept { return w_; }  // out x in
  RowVec& bias() noexcept { return b_; }
  [[nodiscard]] const Tensor2& weights() const noexcept { return w_; }
  [[nodiscard]] const RowVec& bias() const noexcept { return b_; }
  [[nodiscard]] const Tensor2& grad_weights() const noexcept { return dw_; }
  [[nodiscard]] const RowVec& grad_bias() const noexcept { return db_; }

  void collect(std::vector<ParamView>& out);

 private:
  Tensor2 w_;
  RowVec b_;
  Tensor2 dw_;
  RowVec db_;
  std::optional<Tensor2> input_;
};

class BatchNormLayer {
 public:
  explicit BatchNormLayer(std::size_t features, double momentum = 0.1, double epsilon = 1e-5);

  Tensor2 forward(const Tensor2& x, Mode mode);
  [[nodiscard]] Tensor2 infer(const Tensor2& x) const;
  Tensor2 backward(const Tensor2& grad_out);

  [[nodiscard]] std::size_t features() const noexcept { return static_cast<std::size_t>(gamma_.size()); }
  RowVec& gamma() noexcept { return gamma_; }
  RowVec& beta() noexcept { return beta_; }
  RowVec& running_mean() noexcept { return running_mean_; }
  RowVec& running_var() noexcept { return running_var_; }
  [[nodiscard]] const RowVec& gamma() const noexcept { return gamma_; }
  [[nodiscard]] const RowVec& beta() const noexcept { return beta_; }
  [[nodiscard]] const RowVec& running_mean() const noexcept { return running_mean_; }
  [[nodiscard]] const RowVec& running_var() const noexcept { return running_var_; }
  [[nodiscard]] const RowVec& grad_gamma() const noexcept { return dgamma_; }
  [[nodiscard]] const RowVec& grad_beta() const noexcept { return dbeta_; }
  [[nodiscard]] double momentum() const noexcept { return momentum_; }
  [[nodiscard]] double epsilon() const noexcept { return epsilon_; }

  void collect(std::vector<ParamView>& out);

 private:
  RowVec gamma_, beta_, running_mean_, running_var_;
  RowVec dgamma_, dbeta_;
  double momentum_;
  double epsilon_;
  // cache
  std::optional<Mode> last_mode_;
  Tensor2 xhat_;
  RowVec inv_std_;
};

class ReluLayer {
 public:
  Tensor2 forward(const Tensor2& x);
  [[nodiscard]] Tensor2 infer(const Tensor2& x) const;
  Tensor2 backward(const Tensor2& grad_out);

 private:
  std::optional<Tensor2> input_;
};

class SigmoidLayer {
 public:
  Tensor2 forward(const Tensor2& x);
  [[nodiscard]] Tensor2 infer(const Tensor2& x) const;
  Tensor2 backward(const Tensor2& grad_out);

 private:
  std::optional<Tensor2> output_;
};

Tensor2 relu(const Tensor2& x);
Tensor2 sigmoid(const Tensor2& x);

using Layer = std::variant<DenseLayer, BatchNormLayer, ReluLayer, SigmoidLayer>;

/// A feed-forward stack of layers.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {}

  Tensor2 forward(const Tensor2& x);
  [[nodiscard]] Tensor2 infer(const Tensor2& x) const;
  Tensor2 backward(const Tensor2& grad_out);

  void set_mode(Mode mode) noexcept { mode_ = mode; }
  [[nodiscard]] Mode mode() const noexcept { return mode_; }

  std::vector<ParamView> parameters();
  [[nodiscard]] std::size_t parameter_count() const;

  std::vector<Layer>& layers() noexcept { return layers_; }
  [[nodiscard]] const std::vector<Layer>& layers() const noexcept { return layers_; }
  /// Output widths of the dense layers, in order.
  [[nodiscard]] std::vector<std::size_t> dense_widths() const;

 private:
  std::vector<Layer> layers_;
  Mode mode_ = Mode::training;
};

struct LossAndGrad {
  double loss;
  Tensor2 grad;
};

/// Batch-mean cross-entropy of softmax(logits) against hot class indices.
LossAndGrad softmax_cross_entropy(const Tensor2& logits, std::span<const std::uint32_t> targets);
/// Same, with dense targets that must be exactly one-hot per row.
LossAndGrad softmax_cross_entropy(const Tensor2& logits, const Tensor2& onehot_targets);

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config{};
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
};

/// One bias-corrected Adam update of every parameter in `params`.  Moment
/// buffers are created on the first call; later calls must pass the same
/// parameter list shape.
void adam_step(AdamState& state, std::span<const ParamView> params);

}  // namespace rismimo::nn
