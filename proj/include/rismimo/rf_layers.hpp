#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rismimo/channel.hpp"
#include "rismimo/neuralnet.hpp"
#include "rismimo/numerics.hpp"
#include "rismimo/rng.hpp"

// Complex vectors cross the network boundary stacked as [Re z_0..Re z_{n-1},
// Im z_0..Im z_{n-1}]; complex matrices are flattened row-major first.

namespace rismimo::nn {

Tensor2 stack_complex(std::span<const CVector> rows);
std::vector<CVector> unstack_complex(const Tensor2& stacked);
void stack_into(std::span<const cdouble> z, Tensor2& out, Eigen::Index row, Eigen::Index col0 = 0);

enum class PowerNormalization {
  paper,  // x = P sqrt(B) x' / sqrt(sum ||x'_i||^2): batch-average power P^2
  sqrt,   // x = sqrt(P) sqrt(B) x' / sqrt(sum ||x'_i||^2): batch-average power P
};

/// Batch-coupled transmit power normalization (no trainable parameters).
class PowerNormalizeLayer {
 public:
  PowerNormalizeLayer(double power, PowerNormalization mode);

  Tensor2 forward(const Tensor2& x_prime);
  [[nodiscard]] Tensor2 infer(const Tensor2& x_prime) const;
  Tensor2 backward(const Tensor2& grad_out);

  /// The batch-average ||x_i||^2 the layer enforces.
  [[nodiscard]] double target_average_power() const noexcept;

 private:
  [[nodiscard]] double scale_for(double energy, Eigen::Index batch) const;

  double power_;
  PowerNormalization mode_;
  Tensor2 input_;
  double energy_ = 0.0;
  double scale_ = 0.0;
  bool cached_ = false;
};

Tensor2 power_normalize(const Tensor2& x_prime, double power,
                        PowerNormalization mode = PowerNormalization::paper);

/// Per-sample physical link y_i = gain * H_i^H Theta_i G_i x_i + n_i with the
/// true channels.  Noise is additive and treated as a constant in backward.
/// The channel span must stay alive until backward() returns.
class ChannelLayer {
 public:
  struct Grad {
    Tensor2 x;      // B x 2N_t
    Tensor2 theta;  // B x K
  };

  Tensor2 forward(const Tensor2& x, const Tensor2& theta, std::span<const ChannelPair> channels,
                  double gain, double sigma2, Rng* noise);
  Grad backward(const Tensor2& grad_y) const;

  static Tensor2 apply(const Tensor2& x, const Tensor2& theta, std::span<const ChannelPair> channels,
                       double gain, double sigma2, Rng* noise);

 private:
  Tensor2 x_;
  Tensor2 theta_;
  std::span<const ChannelPair> channels_;
  double gain_ = 0.0;
};

/// Per-sample estimated cascaded channel H_eff = H^^H Theta G^, stacked to
/// 2 N_r N_t reals.  The channel span must stay alive until backward().
class CascadeLayer {
 public:
  Tensor2 forward(const Tensor2& theta, std::span<const ChannelPair> estimates);
  [[nodiscard]] Tensor2 backward(const Tensor2& grad_out) const;  // -> B x K

  static Tensor2 apply(const Tensor2& theta, std::span<const ChannelPair> estimates);

 private:
  Tensor2 theta_;
  std::span<const ChannelPair> estimates_;
};

}  // namespace rismimo::nn
