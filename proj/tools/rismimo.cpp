// Command-line front end: train, sweep-snr, sweep-csi, bench, selftest.
//
// Exit status: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rismimo/checkpoint.hpp"
#include "rismimo/errors.hpp"
#include "rismimo/harness.hpp"

namespace {

using namespace rismimo;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_tx, n_rx, streams, elements, order, threads;
  std::optional<double> power;
  std::string output;

  void add(CLI::App& app) {
    app.add_option("--config", config, "JSON config file; flags override its values")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "master seed (default: $RISMIMO_SEED or 1)");
    app.add_option("--n-tx", n_tx, "transmit antennas N_t (default 4)");
    app.add_option("--n-rx", n_rx, "receive antennas N_r (default 2)");
    app.add_option("--streams", streams, "data streams N_s (default 2)");
    app.add_option("--k", elements, "RIS elements K (default 16)");
    app.add_option("--order", order, "modulation order M (default 2)");
    app.add_option("--power", power, "transmit power P (default 4)");
    app.add_option("--threads", threads, "worker threads for sweeps (default 1)");
    app.add_option("-o,--output", output, "output CSV path (default: stdout)");
  }

  [[nodiscard]] ExperimentConfig resolve() const {
    ExperimentConfig c;
    c.seed = default_seed(c.seed);
    if (!config.empty()) c = load_config(config, c);
    if (seed) c.seed = *seed;
    if (n_tx) c.dims.n_tx = *n_tx;
    if (n_rx) c.dims.n_rx = *n_rx;
    if (streams) c.dims.streams = *streams;
    if (elements) c.dims.elements = *elements;
    if (order) c.dims.order = *order;
    if (threads) c.threads = *threads;
    if (power) c.power = *power;
    if (!output.empty()) c.output = output;
    c.train.dims = c.dims;
    c.train.power = c.power;
    c.train.seed = c.seed;
    return c;
  }
};

template <typename F>
void with_output(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write(out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

void print_points(const std::vector<BerPoint>& points) {
  for (const auto& p : points) {
    std::fprintf(stderr, "  %-12s K=%-3zu snr=%6.2f dB sigma_e=%.3f  ber=%.3e  (%llu/%llu)%s\n", p.method.c_str(),
                 p.elements, p.snr_db, p.sigma_e, p.ber(), static_cast<unsigned long long>(p.n_errors),
                 static_cast<unsigned long long>(p.n_bits), p.n_errors < kMinReliableErrors ? "  low-errors" : "");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RIS-assisted MIMO link simulator: model-based design and end-to-end autoencoder"};
  app.require_subcommand(1);

  // train
  CommonFlags train_common;
  std::optional<std::size_t> epochs, batch_size, n_samples;
  std::optional<double> lr, train_snr, train_sigma_e;
  std::string normalization;
  std::string train_checkpoint;
  std::string loss_csv;
  auto* train_cmd = app.add_subcommand("train", "train the autoencoder; writes a checkpoint and a loss CSV");
  train_common.add(*train_cmd);
  train_cmd->add_option("--epochs", epochs, "epochs (default 10)");
  train_cmd->add_option("--batch-size", batch_size, "mini-batch size (default 1000)");
  train_cmd->add_option("--n-samples", n_samples, "samples per epoch (default 200000)");
  train_cmd->add_option("--lr", lr, "Adam learning rate (default 2e-4)");
  train_cmd->add_option("--train-snr", train_snr, "training SNR in dB (default 5)");
  train_cmd->add_option("--sigma-e", train_sigma_e, "CSI error std-dev during training (default 0.1)");
  train_cmd->add_option("--normalization", normalization, "power normalization: paper (P^2) or sqrt (P)")
      ->check(CLI::IsMember({"paper", "sqrt"}));
  train_cmd->add_option("--checkpoint", train_checkpoint, "checkpoint path to write")->required();
  train_cmd->add_option("--loss-csv", loss_csv, "loss trace CSV (default: <checkpoint>.loss.csv)");

  // sweeps
  struct SweepFlags {
    CommonFlags common;
    std::vector<std::string> methods;
    std::string snr;
    std::string sigma_e;
    std::optional<std::uint64_t> n_bits;
    std::optional<std::size_t> max_iter;
    std::optional<double> tol;
    std::string checkpoint;
  };
  SweepFlags snr_flags;
  SweepFlags csi_flags;
  auto add_sweep = [&](const char* name, const char* help, SweepFlags& f) {
    auto* cmd = app.add_subcommand(name, help);
    f.common.add(*cmd);
    cmd->add_option("--method", f.methods, "modelbased, autoencoder, random-phase (repeatable)");
    cmd->add_option("--snr", f.snr, "SNR in dB: value, list a,b,c or range start:stop:step");
    cmd->add_option("--sigma-e", f.sigma_e, "CSI error std-dev: value, list or range");
    cmd->add_option("--n-bits", f.n_bits, "bits per point (default 1000000)");
    cmd->add_option("--max-iter", f.max_iter, "phase optimizer sweeps (default 200)");
    cmd->add_option("--tol", f.tol, "phase optimizer relative tolerance (default 1e-6)");
    cmd->add_option("--checkpoint", f.checkpoint, "trained autoencoder (needed for --method autoencoder)");
    return cmd;
  };
  auto* snr_cmd = add_sweep("sweep-snr", "BER versus SNR", snr_flags);
  auto* csi_cmd = add_sweep("sweep-csi", "BER versus CSI error at fixed SNR", csi_flags);

  // bench
  CommonFlags bench_common;
  std::vector<std::size_t> bench_k;
  std::size_t reps = 100;
  std::size_t bench_batch = 100;
  std::size_t bench_iter = 200;
  bool bench_fixed = false;
  std::string bench_checkpoint;
  auto* bench_cmd = app.add_subcommand("bench", "per-channel design latency: model-based versus autoencoder");
  bench_common.add(*bench_cmd);
  bench_cmd->remove_option(bench_cmd->get_option("--k"));
  bench_cmd->add_option("--k", bench_k, "RIS sizes to benchmark (repeatable, default 16 and 32)");
  bench_cmd->add_option("--reps", reps, "timed repetitions (median reported, >= 100 recommended)");
  bench_cmd->add_option("--batch", bench_batch, "channels per autoencoder inference call");
  bench_cmd->add_option("--max-iter", bench_iter, "phase optimizer sweep cap (default 200, stops at tol 1e-6)");
  bench_cmd->add_flag("--fixed-sweeps", bench_fixed, "run every one of --max-iter sweeps");
  bench_cmd->add_option("--checkpoint", bench_checkpoint, "trained model (default: untrained network of equal size)");

  std::uint64_t selftest_seed = 0;
  auto* self_cmd = app.add_subcommand("selftest", "run the built-in invariant checks");
  self_cmd->add_option("--seed", selftest_seed, "seed (default: $RISMIMO_SEED or 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (train_cmd->parsed()) {
      ExperimentConfig cfg = train_common.resolve();
      TrainConfig& t = cfg.train;
      if (epochs) t.epochs = *epochs;
      if (batch_size) t.batch_size = *batch_size;
      if (n_samples) t.n_samples = *n_samples;
      if (lr) t.lr = *lr;
      if (train_snr) t.train_snr_db = *train_snr;
      if (train_sigma_e) t.sigma_e = *train_sigma_e;
      if (!normalization.empty()) {
        t.normalization = normalization == "sqrt" ? nn::PowerNormalization::sqrt : nn::PowerNormalization::paper;
      }
      cfg.validate();
      const std::size_t total = t.iterations();
      std::fprintf(stderr, "training %zu iterations (K=%zu, batch %zu)\n", total, t.dims.elements, t.batch_size);
      auto [model, trace] = train(t, [&](const LossRecord& r) {
        if (r.iteration % 50 == 0 || r.iteration + 1 == total) {
          std::fprintf(stderr, "  iter %6zu  L_AE %.5f\n", r.iteration, r.total);
        }
      });
      save_checkpoint(model, train_checkpoint);
      const std::string loss_path = loss_csv.empty() ? train_checkpoint + ".loss.csv" : loss_csv;
      write_loss_csv(trace, loss_path);
      std::fprintf(stderr, "wrote %s and %s\n", train_checkpoint.c_str(), loss_path.c_str());
      return 0;
    }

    for (auto [cmd, flags, csi] : {std::tuple{snr_cmd, &snr_flags, false}, std::tuple{csi_cmd, &csi_flags, true}}) {
      if (!cmd->parsed()) continue;
      ExperimentConfig cfg = flags->common.resolve();
      if (csi) {
        cfg.snr_db = {5.0};
        cfg.sigma_e = parse_range("0:0.5:0.1");
      }
      if (!flags->methods.empty()) {
        cfg.methods.clear();
        for (const auto& m : flags->methods) cfg.methods.push_back(parse_method(m));
      }
      if (!flags->snr.empty()) cfg.snr_db = parse_range(flags->snr);
      if (!flags->sigma_e.empty()) cfg.sigma_e = parse_range(flags->sigma_e);
      if (flags->n_bits) cfg.n_bits = *flags->n_bits;
      if (flags->max_iter) cfg.phase_opt.max_iter = *flags->max_iter;
      if (flags->tol) cfg.phase_opt.tol = *flags->tol;
      if (!flags->checkpoint.empty()) cfg.checkpoint = flags->checkpoint;
      cfg.validate();
      std::optional<AutoencoderModel> model;
      if (!cfg.checkpoint.empty()) model = load_checkpoint(cfg.checkpoint, cfg.dims);
      const auto points = run_sweep(cfg, model ? &*model : nullptr);
      print_points(points);
      with_output(cfg.output, [&](std::ostream& out) { write_ber_csv(out, points); });
      return 0;
    }

    if (bench_cmd->parsed()) {
      ExperimentConfig cfg = bench_common.resolve();
      if (bench_k.empty()) bench_k = {16, 32};
      cfg.validate();
      BenchOptions opts;
      opts.reps = reps;
      opts.batch = bench_batch;
      opts.phase_opt = bench_fixed ? PhaseOptOptions{bench_iter, 0.0, false} : PhaseOptOptions{bench_iter, 1e-6, true};
      std::vector<BenchRow> rows;
      for (std::size_t k : bench_k) {
        AeDims d = cfg.dims;
        d.elements = k;
        AutoencoderModel model;
        if (!bench_checkpoint.empty()) {
          model = load_checkpoint(bench_checkpoint, d);
        } else {
          Rng init = Rng(cfg.seed).substream(k);
          model = AutoencoderModel::build(d, cfg.power, cfg.train.normalization, init);
          model.set_mode(nn::Mode::inference);
        }
        rows.push_back(bench_point(model, opts, Rng(cfg.seed).substream(1000 + k)));
        const BenchRow& r = rows.back();
        std::fprintf(stderr, "  K=%-3zu model-based %.4f ms  autoencoder %.4f ms (single %.4f ms)  ratio %.2f\n", k,
                     r.modelbased_ms, r.autoencoder_ms, r.autoencoder_single_ms, r.ratio());
      }
      with_output(cfg.output, [&](std::ostream& out) { write_bench_csv(out, rows); });
      return 0;
    }

    if (self_cmd->parsed()) {
      const std::uint64_t seed = self_cmd->get_option("--seed")->count() > 0 ? selftest_seed : default_seed(1);
      bool ok = true;
      for (const auto& c : run_selftest(seed)) {
        std::printf("%s  %s%s%s\n", c.ok ? "PASS" : "FAIL", c.name.c_str(), c.detail.empty() ? "" : ": ",
                    c.detail.c_str());
        ok = ok && c.ok;
      }
      return ok ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return e.code() == CheckpointError::Code::dimension_mismatch ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
