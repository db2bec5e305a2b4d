#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rismimo/ber.hpp"
#include "rismimo/channel.hpp"
#include "rismimo/modem.hpp"
#include "rismimo/neuralnet.hpp"
#include "rismimo/rf_layers.hpp"

namespace rismimo {

struct AeDims {
  std::size_t order = 2;     // M
  std::size_t streams = 2;   // N_s
  std::size_t n_tx = 4;      // N_t
  std::size_t n_rx = 2;      // N_r
  std::size_t elements = 16; // K

  [[nodiscard]] std::size_t encoder_input() const noexcept { return order * streams + 2 * n_tx * n_rx; }
  [[nodiscard]] std::size_t ris_input() const noexcept { return 2 * elements * (n_tx + n_rx); }
  [[nodiscard]] std::size_t decoder_input() const noexcept { return 2 * n_rx; }
  [[nodiscard]] std::size_t decoder_output() const noexcept { return order * streams; }

  friend bool operator==(const AeDims&, const AeDims&) = default;
};

/// Encoder, RIS network and decoder.
///
///   encoder: M N_s + 2 N_t N_r -> 1024 -> 1024 -> 2 N_t, then power normalization
///   ris_net: 2 K N_t + 2 K N_r -> 256 -> 256 -> 256 -> K, sigmoid
///   decoder: 2 N_r -> 512 -> 512 -> M N_s
///
/// Every hidden dense layer is followed by batch norm and ReLU.  All dense
/// weights and biases are drawn U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
struct AutoencoderModel {
  AeDims dims{};
  double power = 4.0;
  nn::PowerNormalization normalization = nn::PowerNormalization::paper;
  nn::Mlp encoder;
  nn::Mlp ris_net;
  nn::Mlp decoder;

  static AutoencoderModel build(const AeDims& dims, double power, nn::PowerNormalization normalization,
                                Rng& rng);
  void set_mode(nn::Mode mode);
};

struct TrainConfig {
  AeDims dims{};
  std::size_t epochs = 10;
  std::size_t batch_size = 1000;
  double lr = 2e-4;
  double train_snr_db = 5.0;
  std::size_t n_samples = 200000;
  double sigma_e = 0.1;
  double power = 4.0;
  nn::PowerNormalization normalization = nn::PowerNormalization::paper;
  std::uint64_t seed = 1;

  /// Throws DomainError on non-positive values or a batch size that does not
  /// divide n_samples.
  void validate() const;
  [[nodiscard]] std::size_t iterations() const noexcept { return epochs * (n_samples / batch_size); }
};

struct LossRecord {
  std::size_t iteration = 0;
  double total = 0.0;                // L_AE with the weights used in this step
  std::vector<double> stream_loss;   // L_i
  std::vector<double> alpha;         // weights used in this step
  double batch_power = 0.0;          // (1/B) sum ||x_i||^2 of the encoder output
};

struct LossTrace {
  std::vector<LossRecord> records;
};

/// One mini-batch of transmissions: a fresh channel realization per sample.
struct Batch {
  std::vector<ChannelPair> truth;
  std::vector<ChannelPair> estimate;
  std::vector<std::uint32_t> hot;  // B x N_s, row-major one-hot indices
  [[nodiscard]] std::size_t size() const noexcept { return truth.size(); }
};

Batch draw_batch(const AeDims& dims, std::size_t batch, double sigma_e, Rng& rng);

/// Stacked [Re H^, Im H^, Re G^, Im G^] per row.
nn::Tensor2 ris_input(std::span<const ChannelPair> csi);
/// Row i: the M N_s one-hot block followed by stacked H_eff of sample i.
nn::Tensor2 encoder_input(std::span<const std::uint32_t> hot, const nn::Tensor2& heff_stacked,
                          const AeDims& dims);

/// Maps sigmoid outputs in (0, 1) onto phases in (-pi, pi).
nn::Tensor2 sigmoid_to_phase(const nn::Tensor2& s);

// Inference-mode building blocks (pure, safe to share across threads).
PhaseConfig ris_net_forward(const AutoencoderModel& model, const ChannelPair& csi);
std::vector<CVector> encoder_forward(const AutoencoderModel& model, std::span<const OneHotBlock> data,
                                     std::span<const CMatrix> heff);
/// B x (M N_s) logits; stream i occupies columns [i M, (i+1) M).
nn::Tensor2 decoder_forward(const AutoencoderModel& model, std::span<const CVector> received);

struct AeLoss {
  double total = 0.0;
  std::vector<double> per_stream;
  nn::Tensor2 grad;  // d total / d logits
};

/// L_i = softmax cross-entropy of stream i; total = sum alpha_i L_i.
AeLoss compute_loss(const nn::Tensor2& logits, std::span<const std::uint32_t> hot,
                    std::span<const double> alpha, std::size_t order);

/// alpha_i = L_i / sum_j L_j; uniform when every loss is zero.
std::vector<double> update_alpha(std::span<const double> losses);

/// Full chain in inference mode.  If `tx` is non-null it receives the
/// normalized encoder output.
nn::Tensor2 infer_logits(const AutoencoderModel& model, const Batch& batch, double sigma2, Rng* noise,
                         nn::Tensor2* tx = nullptr);

/// Per-stream argmax of the logits.
std::vector<std::uint32_t> decide(const nn::Tensor2& logits, std::size_t order);

/// One training step over a batch; exposed for gradient checking.
class TrainingPass {
 public:
  explicit TrainingPass(AutoencoderModel& model) : model_(model) {}

  /// Forward in the model's current mode; returns logits.
  nn::Tensor2 forward(const Batch& batch, double sigma2, Rng* noise);
  /// Backpropagates d loss / d logits into every parameter gradient.
  void backward(const nn::Tensor2& grad_logits);

  [[nodiscard]] const nn::Tensor2& transmitted() const noexcept { return tx_; }
  [[nodiscard]] const nn::Tensor2& phases() const noexcept { return theta_; }

 private:
  AutoencoderModel& model_;
  nn::CascadeLayer cascade_;
  nn::ChannelLayer channel_;
  std::optional<nn::PowerNormalizeLayer> norm_;
  nn::Tensor2 theta_;
  nn::Tensor2 tx_;
  std::size_t hot_width_ = 0;
};

using TrainObserver = std::function<void(const LossRecord&)>;

std::pair<AutoencoderModel, LossTrace> train(const TrainConfig& config, const TrainObserver& observer = {});

/// Monte Carlo BER of a trained model.  Batch b draws from rng.substream(b).
BerPoint evaluate_ber(const AutoencoderModel& model, double snr_db, double sigma_e, std::uint64_t n_bits,
                      const Rng& rng, std::size_t eval_batch = 1000);

}  // namespace rismimo
