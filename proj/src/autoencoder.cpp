#include "rismimo/autoencoder.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include "rismimo/errors.hpp"

namespace rismimo {

namespace {

using nn::Tensor2;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void validate_dims(const AeDims& d) {
  if (d.order < 2) throw DomainError("autoencoder: M must be >= 2");
  if (d.streams == 0 || d.n_tx == 0 || d.n_rx == 0 || d.elements == 0) {
    throw DomainError("autoencoder: dimensions must be positive");
  }
}

nn::Mlp hidden_stack(std::size_t in, std::size_t width, std::size_t depth, std::size_t out, Rng& rng) {
  std::vector<nn::Layer> layers;
  std::size_t prev = in;
  for (std::size_t i = 0; i < depth; ++i) {
    layers.emplace_back(nn::DenseLayer::fan_in_uniform(prev, width, rng));
    layers.emplace_back(nn::BatchNormLayer(width));
    layers.emplace_back(nn::ReluLayer{});
    prev = width;
  }
  layers.emplace_back(nn::DenseLayer::fan_in_uniform(prev, out, rng));
  return nn::Mlp(std::move(layers));
}

std::vector<nn::ParamView> all_parameters(AutoencoderModel& m) {
  std::vector<nn::ParamView> out = m.encoder.parameters();
  for (auto& p : m.ris_net.parameters()) out.push_back(p);
  for (auto& p : m.decoder.parameters()) out.push_back(p);
  return out;
}

double channel_gain(const AutoencoderModel& m) {
  return std::sqrt(m.power / static_cast<double>(m.dims.streams));
}

std::size_t log2_order(std::size_t order) {
  std::size_t b = 0;
  while ((std::size_t{1} << b) < order) ++b;
  return b;
}

}  // namespace

AutoencoderModel AutoencoderModel::build(const AeDims& dims, double power,
                                         nn::PowerNormalization normalization, Rng& rng) {
  validate_dims(dims);
  if (!(power > 0.0)) throw DomainError("autoencoder: P must be > 0");
  AutoencoderModel m;
  m.dims = dims;
  m.power = power;
  m.normalization = normalization;
  Rng enc = rng.substream(1);
  Rng ris = rng.substream(2);
  Rng dec = rng.substream(3);
  m.encoder = hidden_stack(dims.encoder_input(), 1024, 2, 2 * dims.n_tx, enc);
  m.ris_net = hidden_stack(dims.ris_input(), 256, 3, dims.elements, ris);
  m.ris_net.layers().emplace_back(nn::SigmoidLayer{});
  m.decoder = hidden_stack(dims.decoder_input(), 512, 2, dims.decoder_output(), dec);
  return m;
}

void AutoencoderModel::set_mode(nn::Mode mode) {
  encoder.set_mode(mode);
  ris_net.set_mode(mode);
  decoder.set_mode(mode);
}

void TrainConfig::validate() const {
  validate_dims(dims);
  if (epochs == 0 || batch_size == 0 || n_samples == 0) throw DomainError("train: counts must be positive");
  if (batch_size < 2) throw DomainError("train: batch size must be >= 2 for batch norm");
  if (n_samples % batch_size != 0) {
    throw DomainError("train: batch size " + std::to_string(batch_size) + " does not divide " +
                      std::to_string(n_samples) + " samples");
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) throw DomainError("train: learning rate must be > 0");
  if (!(power > 0.0)) throw DomainError("train: P must be > 0");
  if (!(sigma_e >= 0.0)) throw DomainError("train: sigma_e must be >= 0");
  if (!std::isfinite(train_snr_db)) throw DomainError("train: SNR must be finite");
}

Batch draw_batch(const AeDims& dims, std::size_t batch, double sigma_e, Rng& rng) {
  Batch b;
  b.truth.reserve(batch);
  b.estimate.reserve(batch);
  b.hot.reserve(batch * dims.streams);
  const CsiModel csi{sigma_e};
  for (std::size_t i = 0; i < batch; ++i) {
    b.truth.push_back(sample_channels(rng, dims.elements, dims.n_tx, dims.n_rx));
    b.estimate.push_back(corrupt_csi(b.truth.back(), csi, rng));
    for (std::size_t s = 0; s < dims.streams; ++s) {
      b.hot.push_back(static_cast<std::uint32_t>(rng.below(dims.order)));
    }
  }
  return b;
}

Tensor2 ris_input(std::span<const ChannelPair> csi) {
  if (csi.empty()) throw DimensionError("ris_input: empty batch");
  const std::size_t k = csi.front().elements();
  const auto nh = static_cast<Eigen::Index>(k * csi.front().rx_antennas());
  const auto ng = static_cast<Eigen::Index>(k * csi.front().tx_antennas());
  Tensor2 out(static_cast<Eigen::Index>(csi.size()), 2 * (nh + ng));
  for (std::size_t i = 0; i < csi.size(); ++i) {
    const ChannelPair& p = csi[i];
    if (static_cast<Eigen::Index>(p.h.size()) != nh || static_cast<Eigen::Index>(p.g.size()) != ng) {
      throw DimensionError("ris_input: mixed channel dimensions");
    }
    const auto row = static_cast<Eigen::Index>(i);
    nn::stack_into(p.h.entries(), out, row, 0);
    nn::stack_into(p.g.entries(), out, row, 2 * nh);
  }
  return out;
}

Tensor2 encoder_input(std::span<const std::uint32_t> hot, const Tensor2& heff, const AeDims& dims) {
  const auto b = heff.rows();
  if (hot.size() != static_cast<std::size_t>(b) * dims.streams) {
    throw DimensionError("encoder_input: one-hot count does not match batch");
  }
  if (static_cast<std::size_t>(heff.cols()) != 2 * dims.n_tx * dims.n_rx) {
    throw DimensionError("encoder_input: cascaded channel width mismatch");
  }
  const auto hw = static_cast<Eigen::Index>(dims.order * dims.streams);
  Tensor2 out = Tensor2::Zero(b, hw + heff.cols());
  for (Eigen::Index i = 0; i < b; ++i) {
    for (std::size_t s = 0; s < dims.streams; ++s) {
      const std::uint32_t h = hot[static_cast<std::size_t>(i) * dims.streams + s];
      if (h >= dims.order) throw DomainError("encoder_input: hot index out of range");
      out(i, static_cast<Eigen::Index>(s * dims.order + h)) = 1.0;
    }
  }
  out.rightCols(heff.cols()) = heff;
  return out;
}

Tensor2 sigmoid_to_phase(const Tensor2& s) {
  return (kTwoPi * s.array() - std::numbers::pi).matrix();
}

PhaseConfig ris_net_forward(const AutoencoderModel& model, const ChannelPair& csi) {
  const Tensor2 theta = sigmoid_to_phase(model.ris_net.infer(ris_input({&csi, 1})));
  std::vector<double> angles(static_cast<std::size_t>(theta.cols()));
  for (Eigen::Index k = 0; k < theta.cols(); ++k) {
    angles[static_cast<std::size_t>(k)] = std::clamp(theta(0, k), -std::numbers::pi, std::numbers::pi);
  }
  return PhaseConfig(std::move(angles));
}

std::vector<CVector> encoder_forward(const AutoencoderModel& model, std::span<const OneHotBlock> data,
                                     std::span<const CMatrix> heff) {
  if (data.size() != heff.size() || data.empty()) {
    throw DimensionError("encoder_forward: data and channel batch sizes differ");
  }
  const AeDims& d = model.dims;
  std::vector<std::uint32_t> hot;
  Tensor2 h(static_cast<Eigen::Index>(heff.size()), static_cast<Eigen::Index>(2 * d.n_tx * d.n_rx));
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].order() != d.order || data[i].streams() != d.streams) {
      throw DimensionError("encoder_forward: one-hot block shape mismatch");
    }
    if (heff[i].rows() != d.n_rx || heff[i].cols() != d.n_tx) {
      throw DimensionError("encoder_forward: cascaded channel must be N_r x N_t");
    }
    hot.insert(hot.end(), data[i].hot_indices().begin(), data[i].hot_indices().end());
    nn::stack_into(heff[i].entries(), h, static_cast<Eigen::Index>(i));
  }
  const Tensor2 x = nn::power_normalize(model.encoder.infer(encoder_input(hot, h, d)), model.power,
                                        model.normalization);
  return nn::unstack_complex(x);
}

Tensor2 decoder_forward(const AutoencoderModel& model, std::span<const CVector> received) {
  for (const auto& y : received) {
    if (y.size() != model.dims.n_rx) throw DimensionError("decoder_forward: received vector length != N_r");
  }
  return model.decoder.infer(nn::stack_complex(received));
}

AeLoss compute_loss(const Tensor2& logits, std::span<const std::uint32_t> hot, std::span<const double> alpha,
                    std::size_t order) {
  const std::size_t streams = alpha.size();
  if (streams == 0 || static_cast<std::size_t>(logits.cols()) != streams * order) {
    throw DimensionError("compute_loss: logits width must be M N_s");
  }
  const auto b = static_cast<std::size_t>(logits.rows());
  if (hot.size() != b * streams) throw DimensionError("compute_loss: target count mismatch");
  AeLoss out;
  out.grad = Tensor2::Zero(logits.rows(), logits.cols());
  out.per_stream.resize(streams);
  std::vector<std::uint32_t> targets(b);
  const auto m = static_cast<Eigen::Index>(order);
  for (std::size_t s = 0; s < streams; ++s) {
    for (std::size_t i = 0; i < b; ++i) targets[i] = hot[i * streams + s];
    const auto col = static_cast<Eigen::Index>(s) * m;
    const Tensor2 block = logits.middleCols(col, m);
    const nn::LossAndGrad lg = nn::softmax_cross_entropy(block, targets);
    out.per_stream[s] = lg.loss;
    out.total += alpha[s] * lg.loss;
    out.grad.middleCols(col, m) = alpha[s] * lg.grad;
  }
  return out;
}

std::vector<double> update_alpha(std::span<const double> losses) {
  if (losses.empty()) throw DimensionError("update_alpha: no losses");
  double sum = 0.0;
  for (double l : losses) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw DomainError("update_alpha: losses must be finite and >= 0");
    sum += l;
  }
  std::vector<double> alpha(losses.size(), 1.0 / static_cast<double>(losses.size()));
  if (sum > 0.0) {
    for (std::size_t i = 0; i < losses.size(); ++i) alpha[i] = losses[i] / sum;
  }
  return alpha;
}

Tensor2 infer_logits(const AutoencoderModel& model, const Batch& batch, double sigma2, Rng* noise,
                     Tensor2* tx) {
  const Tensor2 theta = sigmoid_to_phase(model.ris_net.infer(ris_input(batch.estimate)));
  const Tensor2 heff = nn::CascadeLayer::apply(theta, batch.estimate);
  Tensor2 x = nn::power_normalize(model.encoder.infer(encoder_input(batch.hot, heff, model.dims)),
                                  model.power, model.normalization);
  const Tensor2 y = nn::ChannelLayer::apply(x, theta, batch.truth, channel_gain(model), sigma2, noise);
  if (tx != nullptr) *tx = std::move(x);
  return model.decoder.infer(y);
}

std::vector<std::uint32_t> decide(const Tensor2& logits, std::size_t order) {
  if (order == 0 || logits.cols() % static_cast<Eigen::Index>(order) != 0) {
    throw DimensionError("decide: logits width is not a multiple of M");
  }
  const auto m = static_cast<Eigen::Index>(order);
  const Eigen::Index streams = logits.cols() / m;
  std::vector<std::uint32_t> out;
  out.reserve(static_cast<std::size_t>(logits.rows() * streams));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    for (Eigen::Index s = 0; s < streams; ++s) {
      Eigen::Index best = 0;
      logits.row(i).segment(s * m, m).maxCoeff(&best);
      out.push_back(static_cast<std::uint32_t>(best));
    }
  }
  return out;
}

// ---- training pass ----------------------------------------------------------

Tensor2 TrainingPass::forward(const Batch& batch, double sigma2, Rng* noise) {
  const Tensor2 s = model_.ris_net.forward(ris_input(batch.estimate));
  theta_ = sigmoid_to_phase(s);
  const Tensor2 heff = cascade_.forward(theta_, batch.estimate);
  const Tensor2 in = encoder_input(batch.hot, heff, model_.dims);
  hot_width_ = static_cast<std::size_t>(in.cols() - heff.cols());
  norm_.emplace(model_.power, model_.normalization);
  tx_ = norm_->forward(model_.encoder.forward(in));
  const Tensor2 y = channel_.forward(tx_, theta_, batch.truth, channel_gain(model_), sigma2, noise);
  return model_.decoder.forward(y);
}

void TrainingPass::backward(const Tensor2& grad_logits) {
  if (!norm_) throw StateError("training pass backward without forward");
  const Tensor2 gy = model_.decoder.backward(grad_logits);
  const nn::ChannelLayer::Grad gc = channel_.backward(gy);
  const Tensor2 gin = model_.encoder.backward(norm_->backward(gc.x));
  const auto hw = static_cast<Eigen::Index>(hot_width_);
  const Tensor2 gtheta = gc.theta + cascade_.backward(gin.rightCols(gin.cols() - hw));
  model_.ris_net.backward(kTwoPi * gtheta);
}

// ---- training loop ----------------------------------------------------------

std::pair<AutoencoderModel, LossTrace> train(const TrainConfig& config, const TrainObserver& observer) {
  config.validate();
  const Rng root(config.seed);
  Rng init = root.substream(0);
  AutoencoderModel model = AutoencoderModel::build(config.dims, config.power, config.normalization, init);
  model.set_mode(nn::Mode::training);

  const double sigma2 = NoiseModel::from_snr_db(config.power, config.train_snr_db).sigma2;
  nn::AdamState adam;
  adam.config.lr = config.lr;
  std::vector<double> alpha(config.dims.streams, 1.0 / static_cast<double>(config.dims.streams));
  LossTrace trace;
  const std::size_t total = config.iterations();
  trace.records.reserve(total);
  const Rng data_root = root.substream(1);

  for (std::size_t it = 0; it < total; ++it) {
    const Rng step = data_root.substream(it);
    Rng data_rng = step.substream(0);
    Rng noise_rng = step.substream(1);
    const Batch batch = draw_batch(config.dims, config.batch_size, config.sigma_e, data_rng);

    TrainingPass pass(model);
    const Tensor2 logits = pass.forward(batch, sigma2, &noise_rng);
    const AeLoss loss = compute_loss(logits, batch.hot, alpha, config.dims.order);
    if (!std::isfinite(loss.total)) {
      throw DomainError("train: loss diverged at iteration " + std::to_string(it));
    }
    pass.backward(loss.grad);
    const std::vector<nn::ParamView> params = all_parameters(model);
    adam_step(adam, params);

    LossRecord rec;
    rec.iteration = it;
    rec.total = loss.total;
    rec.stream_loss = loss.per_stream;
    rec.alpha = alpha;
    rec.batch_power = pass.transmitted().rowwise().squaredNorm().mean();
    if (observer) observer(rec);
    trace.records.push_back(std::move(rec));
    alpha = update_alpha(loss.per_stream);
  }
  model.set_mode(nn::Mode::inference);
  return {std::move(model), std::move(trace)};
}

// ---- evaluation -------------------------------------------------------------

BerPoint evaluate_ber(const AutoencoderModel& model, double snr_db, double sigma_e, std::uint64_t n_bits,
                      const Rng& rng, std::size_t eval_batch) {
  if (eval_batch == 0) throw DomainError("evaluate_ber: batch size must be positive");
  if (n_bits == 0) throw DomainError("evaluate_ber: need at least one bit");
  const auto start = std::chrono::steady_clock::now();
  const AeDims& d = model.dims;
  const std::size_t bits_per_label = log2_order(d.order);
  const std::uint64_t bits_per_sample = bits_per_label * d.streams;
  const std::uint64_t samples = (n_bits + bits_per_sample - 1) / bits_per_sample;
  const double sigma2 = NoiseModel::from_snr_db(model.power, snr_db).sigma2;

  BerPoint point;
  point.snr_db = snr_db;
  point.sigma_e = sigma_e;
  point.method = "autoencoder";
  point.elements = d.elements;
  std::uint64_t done = 0;
  for (std::uint64_t b = 0; done < samples; ++b) {
    const auto n = static_cast<std::size_t>(std::min<std::uint64_t>(eval_batch, samples - done));
    const Rng stream = rng.substream(b);
    Rng data_rng = stream.substream(0);
    Rng noise_rng = stream.substream(1);
    const Batch batch = draw_batch(d, n, sigma_e, data_rng);
    const std::vector<std::uint32_t> got = decide(infer_logits(model, batch, sigma2, &noise_rng), d.order);
    for (std::size_t i = 0; i < got.size(); ++i) {
      point.n_errors += static_cast<std::uint64_t>(std::popcount(got[i] ^ batch.hot[i]));
    }
    done += n;
  }
  point.n_bits = samples * bits_per_sample;
  point.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return point;
}

}  // namespace rismimo
