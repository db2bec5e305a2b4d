#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rismimo/autoencoder.hpp"
#include "rismimo/ber.hpp"
#include "rismimo/modelbased.hpp"

namespace rismimo {

/// Invalid user configuration (bad flag value, unknown JSON key, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Method { modelbased, autoencoder, random_phase };

std::string to_string(Method m);
Method parse_method(const std::string& name);

struct ExperimentConfig {
  AeDims dims{};
  double power = 4.0;
  std::vector<double> snr_db{0.0, 5.0, 10.0};
  std::vector<double> sigma_e{0.1};
  std::uint64_t n_bits = 1000000;
  std::vector<Method> methods{Method::modelbased};
  PhaseOptOptions phase_opt{};
  TrainConfig train{};
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::size_t eval_batch = 1000;
  std::string output;
  std::string checkpoint;

  /// Throws ConfigError.
  void validate() const;
};

/// Flat JSON object; keys absent from the text keep the values of `base`.
ExperimentConfig parse_config_json(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// "a:b:s" (inclusive of b when it lies on the grid) or a comma list.
std::vector<double> parse_range(const std::string& spec);

/// Seed from $RISMIMO_SEED if set, else `fallback`.
std::uint64_t default_seed(std::uint64_t fallback = 1);

/// Runs body(i) for i in [0, n) on up to `threads` workers.  The first
/// exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

/// I.i.d. uniform phases in [-pi, pi].
PhaseConfig random_phase_baseline(const ChannelPair& csi, Rng& rng);

/// Model-based or random-phase Monte Carlo point.  Trial t draws from
/// rng.substream(t); rank-deficient trials are counted in `skipped` and
/// their bits are excluded.
BerPoint modelbased_point(const ExperimentConfig& config, Method method, double snr_db, double sigma_e,
                          const Rng& rng);

/// Grid over (sigma_e, snr) for every configured method, sigma_e outer.
/// Point j of every method uses the same sub-stream.  `model` is required
/// when the autoencoder is among the methods.
std::vector<BerPoint> run_sweep(const ExperimentConfig& config, const AutoencoderModel* model = nullptr);

double q_function(double x);
double awgn_bpsk_theory(double snr_db);
/// Scalar BPSK over complex AWGN with SNR = 1 / sigma^2.
BerPoint awgn_bpsk_point(double snr_db, std::uint64_t n_bits, const Rng& rng);

// ---- CSV --------------------------------------------------------------------

std::string ber_csv_header();
void write_ber_csv(std::ostream& out, const std::vector<BerPoint>& points);
void write_ber_csv(const std::vector<BerPoint>& points, const std::filesystem::path& path);
std::vector<BerPoint> read_ber_csv(std::istream& in);
std::vector<BerPoint> read_ber_csv(const std::filesystem::path& path);

void write_loss_csv(std::ostream& out, const LossTrace& trace);
void write_loss_csv(const LossTrace& trace, const std::filesystem::path& path);
LossTrace read_loss_csv(std::istream& in);
LossTrace read_loss_csv(const std::filesystem::path& path);

// ---- runtime benchmark ------------------------------------------------------

struct BenchRow {
  std::size_t elements = 0;
  std::size_t reps = 0;
  double modelbased_ms = 0.0;        // median per-channel design time
  double autoencoder_ms = 0.0;       // median per-channel inference time, batched
  double autoencoder_single_ms = 0.0;  // median time of a batch of one
  [[nodiscard]] double ratio() const noexcept { return modelbased_ms / autoencoder_ms; }
};

struct BenchOptions {
  std::size_t reps = 100;
  std::size_t warmup = 5;
  std::size_t batch = 100;
  double snr_db = 5.0;  // sets sigma^2 for water-filling
  PhaseOptOptions phase_opt{};
};

/// Model-based: phase optimization plus SVD/water-filling design on one
/// estimated channel.  Autoencoder: the full inference chain.  Both are
/// timed on fresh realizations drawn outside the timed region.
BenchRow bench_point(const AutoencoderModel& model, const BenchOptions& options, const Rng& rng);

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

// ---- self test --------------------------------------------------------------

struct CheckResult {
  std::string name;
  bool ok = false;
  std::string detail;
};

std::vector<CheckResult> run_selftest(std::uint64_t seed);

}  // namespace rismimo
