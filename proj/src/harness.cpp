#include "rismimo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "rismimo/checkpoint.hpp"
#include "rismimo/errors.hpp"

namespace rismimo {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw std::runtime_error("bad number '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s.front() == '-' || end != s.c_str() + s.size()) {
    throw std::runtime_error("bad integer '" + s + "'");
  }
  return v;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

// ---- configuration ----------------------------------------------------------

std::string to_string(Method m) {
  switch (m) {
    case Method::modelbased: return "modelbased";
    case Method::autoencoder: return "autoencoder";
    case Method::random_phase: return "random-phase";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "modelbased") return Method::modelbased;
  if (name == "autoencoder") return Method::autoencoder;
  if (name == "random-phase") return Method::random_phase;
  throw ConfigError("unknown method '" + name + "' (expected modelbased, autoencoder, random-phase)");
}

void ExperimentConfig::validate() const {
  const AeDims& d = dims;
  if (d.n_tx == 0 || d.n_rx == 0 || d.streams == 0 || d.elements == 0) {
    throw ConfigError("dimensions must be positive");
  }
  if (d.streams > std::min(d.n_tx, d.n_rx)) throw ConfigError("N_s must not exceed min(N_t, N_r)");
  if (!(power > 0.0) || !std::isfinite(power)) throw ConfigError("P must be a positive number");
  if (snr_db.empty()) throw ConfigError("at least one SNR value is required");
  for (double s : snr_db) {
    if (!std::isfinite(s)) throw ConfigError("SNR values must be finite");
  }
  if (sigma_e.empty()) throw ConfigError("at least one sigma_e value is required");
  for (double s : sigma_e) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("sigma_e values must be >= 0");
  }
  if (n_bits == 0) throw ConfigError("n_bits must be positive");
  if (methods.empty()) throw ConfigError("at least one method is required");
  const bool classical = std::any_of(methods.begin(), methods.end(),
                                     [](Method m) { return m != Method::autoencoder; });
  if (classical && d.order != 2 && d.order != 4 && d.order != 16 && d.order != 64) {
    throw ConfigError("model-based detection supports M in {2, 4, 16, 64}");
  }
  if (d.order < 2 || (d.order & (d.order - 1)) != 0) throw ConfigError("M must be a power of two >= 2");
  if (phase_opt.max_iter == 0) throw ConfigError("phase_opt.max_iter must be positive");
  if (!(phase_opt.tol >= 0.0)) throw ConfigError("phase_opt.tol must be >= 0");
  if (threads == 0) throw ConfigError("threads must be positive");
  if (eval_batch == 0) throw ConfigError("eval_batch must be positive");
  try {
    TrainConfig t = train;
    t.dims = dims;
    t.power = power;
    t.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config_json(const std::string& text, ExperimentConfig base) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c = std::move(base);
  auto list = [](const json& v, const char* key) {
    std::vector<double> out;
    if (v.is_number()) return std::vector<double>{v.get<double>()};
    if (v.is_string()) return parse_range(v.get<std::string>());
    if (!v.is_array()) throw ConfigError(std::string(key) + " must be a number, list or range string");
    for (const auto& x : v) out.push_back(x.get<double>());
    return out;
  };
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n_tx") c.dims.n_tx = v.get<std::size_t>();
      else if (key == "n_rx") c.dims.n_rx = v.get<std::size_t>();
      else if (key == "streams") c.dims.streams = v.get<std::size_t>();
      else if (key == "elements") c.dims.elements = v.get<std::size_t>();
      else if (key == "order") c.dims.order = v.get<std::size_t>();
      else if (key == "power") c.power = v.get<double>();
      else if (key == "snr_db") c.snr_db = list(v, "snr_db");
      else if (key == "sigma_e") c.sigma_e = list(v, "sigma_e");
      else if (key == "n_bits") c.n_bits = v.get<std::uint64_t>();
      else if (key == "method") {
        c.methods.clear();
        if (v.is_string()) c.methods.push_back(parse_method(v.get<std::string>()));
        else for (const auto& m : v) c.methods.push_back(parse_method(m.get<std::string>()));
      } else if (key == "phase_max_iter") c.phase_opt.max_iter = v.get<std::size_t>();
      else if (key == "phase_tol") c.phase_opt.tol = v.get<double>();
      else if (key == "epochs") c.train.epochs = v.get<std::size_t>();
      else if (key == "batch_size") c.train.batch_size = v.get<std::size_t>();
      else if (key == "lr") c.train.lr = v.get<double>();
      else if (key == "train_snr_db") c.train.train_snr_db = v.get<double>();
      else if (key == "n_samples") c.train.n_samples = v.get<std::size_t>();
      else if (key == "train_sigma_e") c.train.sigma_e = v.get<double>();
      else if (key == "normalization") {
        const auto n = v.get<std::string>();
        if (n == "paper") c.train.normalization = nn::PowerNormalization::paper;
        else if (n == "sqrt") c.train.normalization = nn::PowerNormalization::sqrt;
        else throw ConfigError("normalization must be 'paper' or 'sqrt'");
      } else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "threads") c.threads = v.get<std::size_t>();
      else if (key == "eval_batch") c.eval_batch = v.get<std::size_t>();
      else if (key == "output") c.output = v.get<std::string>();
      else if (key == "checkpoint") c.checkpoint = v.get<std::string>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config value has the wrong type: ") + e.what());
  }
  c.train.dims = c.dims;
  c.train.power = c.power;
  c.train.seed = c.seed;
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_json(ss.str(), std::move(base));
}

std::vector<double> parse_range(const std::string& spec) {
  auto number = [&](const std::string& s) {
    try {
      return to_double(s);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + s + "' in '" + spec + "'");
    }
  };
  if (spec.find(':') != std::string::npos) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3) throw ConfigError("range must be start:stop:step, got '" + spec + "'");
    const double a = number(parts[0]);
    const double b = number(parts[1]);
    const double s = number(parts[2]);
    if (!(s > 0.0) || b < a) throw ConfigError("range needs step > 0 and stop >= start: '" + spec + "'");
    const auto n = static_cast<std::size_t>(std::floor((b - a) / s + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = a + static_cast<double>(i) * s;
    return out;
  }
  std::vector<double> out;
  for (const auto& p : split(spec, ',')) out.push_back(number(p));
  if (out.empty()) throw ConfigError("empty value list");
  return out;
}

std::uint64_t default_seed(std::uint64_t fallback) {
  const char* env = std::getenv("RISMIMO_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  try {
    return to_u64(env);
  } catch (const std::exception&) {
    throw ConfigError(std::string("RISMIMO_SEED is not an unsigned integer: '") + env + "'");
  }
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

PhaseConfig random_phase_baseline(const ChannelPair& csi, Rng& rng) {
  return PhaseConfig::random(csi.elements(), rng);
}

// ---- Monte Carlo ------------------------------------------------------------

BerPoint modelbased_point(const ExperimentConfig& config, Method method, double snr_db, double sigma_e,
                          const Rng& rng) {
  if (method == Method::autoencoder) throw ConfigError("modelbased_point: not a model-based method");
  const auto t0 = Clock::now();
  const Constellation constellation = make_constellation(config.dims.order);
  ModelBasedConfig mb;
  mb.n_tx = config.dims.n_tx;
  mb.n_rx = config.dims.n_rx;
  mb.streams = config.dims.streams;
  mb.elements = config.dims.elements;
  mb.order = config.dims.order;
  mb.power = config.power;
  mb.sigma2 = NoiseModel::from_snr_db(config.power, snr_db).sigma2;
  mb.sigma_e = sigma_e;
  mb.phases = method == Method::modelbased ? PhaseMode::optimized : PhaseMode::random;
  mb.phase_opt = config.phase_opt;

  const std::uint64_t per_trial = mb.streams * constellation.bits_per_symbol();
  const std::uint64_t trials = (config.n_bits + per_trial - 1) / per_trial;
  BerPoint p;
  p.snr_db = snr_db;
  p.sigma_e = sigma_e;
  p.method = to_string(method);
  p.elements = mb.elements;
  for (std::uint64_t t = 0; t < trials; ++t) {
    Rng trial = rng.substream(t);
    try {
      const TrialBits bits = run_modelbased_trial(mb, constellation, trial);
      p.n_errors += count_bit_errors(bits.tx, bits.rx);
      p.n_bits += bits.tx.size();
    } catch (const RankDeficiencyError&) {
      ++p.skipped;
    }
  }
  p.wall_time_ms = ms_since(t0);
  return p;
}

std::vector<BerPoint> run_sweep(const ExperimentConfig& config, const AutoencoderModel* model) {
  config.validate();
  struct Task {
    Method method;
    double sigma_e;
    double snr;
    std::uint64_t stream;
  };
  std::vector<Task> tasks;
  for (Method m : config.methods) {
    std::uint64_t j = 0;
    for (double se : config.sigma_e) {
      for (double snr : config.snr_db) tasks.push_back({m, se, snr, j++});
    }
  }
  const bool needs_model = std::any_of(config.methods.begin(), config.methods.end(),
                                       [](Method m) { return m == Method::autoencoder; });
  if (needs_model) {
    if (model == nullptr) throw ConfigError("the autoencoder method needs a trained model (--checkpoint)");
    if (!(model->dims == config.dims)) throw ConfigError("checkpoint dimensions do not match the config");
  }
  const Rng root(config.seed);
  std::vector<BerPoint> out(tasks.size());
  parallel_for(tasks.size(), config.threads, [&](std::size_t i) {
    const Task& t = tasks[i];
    const Rng stream = root.substream(t.stream);
    out[i] = t.method == Method::autoencoder
                 ? evaluate_ber(*model, t.snr, t.sigma_e, config.n_bits, stream, config.eval_batch)
                 : modelbased_point(config, t.method, t.snr, t.sigma_e, stream);
  });
  return out;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double awgn_bpsk_theory(double snr_db) { return q_function(std::sqrt(2.0 * std::pow(10.0, snr_db / 10.0))); }

BerPoint awgn_bpsk_point(double snr_db, std::uint64_t n_bits, const Rng& rng) {
  const auto t0 = Clock::now();
  const double sigma2 = 1.0 / std::pow(10.0, snr_db / 10.0);
  Rng r = rng;
  BerPoint p;
  p.snr_db = snr_db;
  p.method = "awgn-bpsk";
  for (std::uint64_t i = 0; i < n_bits; ++i) {
    const std::uint8_t b = r.bit();
    const double s = b == 0 ? 1.0 : -1.0;
    const double y = s + r.complex_normal(sigma2).real();
    const std::uint8_t d = y < 0.0 ? 1 : 0;
    p.n_errors += d != b ? 1 : 0;
  }
  p.n_bits = n_bits;
  p.wall_time_ms = ms_since(t0);
  return p;
}

// ---- CSV --------------------------------------------------------------------

std::string ber_csv_header() {
  return "snr_db,sigma_e,n_bits,n_errors,ber,wall_time_ms,ci95_half_width,low_errors,skipped,method,k";
}

void write_ber_csv(std::ostream& out, const std::vector<BerPoint>& points) {
  out << ber_csv_header() << "\n";
  for (const auto& p : points) {
    const Interval ci = wilson_interval(p.n_errors, p.n_bits);
    out << fmt17(p.snr_db) << ',' << fmt17(p.sigma_e) << ',' << p.n_bits << ',' << p.n_errors << ','
        << fmt17(p.ber()) << ',' << fmt17(p.wall_time_ms) << ',' << fmt17(ci.half_width()) << ','
        << (p.n_errors < kMinReliableErrors ? 1 : 0) << ',' << p.skipped << ',' << p.method << ','
        << p.elements << "\n";
  }
}

void write_ber_csv(const std::vector<BerPoint>& points, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  write_ber_csv(out, points);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<BerPoint> read_ber_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("BER CSV: missing header");
  strip_cr(line);
  if (line != ber_csv_header()) throw std::runtime_error("BER CSV: unexpected header '" + line + "'");
  std::vector<BerPoint> out;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 11) throw std::runtime_error("BER CSV: expected 11 fields in '" + line + "'");
    BerPoint p;
    p.snr_db = to_double(f[0]);
    p.sigma_e = to_double(f[1]);
    p.n_bits = to_u64(f[2]);
    p.n_errors = to_u64(f[3]);
    p.wall_time_ms = to_double(f[5]);
    p.skipped = to_u64(f[8]);
    p.method = f[9];
    p.elements = to_u64(f[10]);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<BerPoint> read_ber_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  try {
    return read_ber_csv(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_loss_csv(std::ostream& out, const LossTrace& trace) {
  const std::size_t ns = trace.records.empty() ? 0 : trace.records.front().stream_loss.size();
  out << "iteration,L_AE";
  for (std::size_t i = 1; i <= ns; ++i) out << ",L_" << i;
  for (std::size_t i = 1; i <= ns; ++i) out << ",alpha_" << i;
  out << ",batch_power\n";
  for (const auto& r : trace.records) {
    if (r.stream_loss.size() != ns || r.alpha.size() != ns) throw DimensionError("loss CSV: ragged trace");
    out << r.iteration << ',' << fmt17(r.total);
    for (double v : r.stream_loss) out << ',' << fmt17(v);
    for (double v : r.alpha) out << ',' << fmt17(v);
    out << ',' << fmt17(r.batch_power) << "\n";
  }
}

void write_loss_csv(const LossTrace& trace, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  write_loss_csv(out, trace);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

LossTrace read_loss_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("loss CSV: missing header");
  strip_cr(line);
  const auto head = split(line, ',');
  if (head.size() < 3 || head[0] != "iteration" || head[1] != "L_AE" || (head.size() - 3) % 2 != 0) {
    throw std::runtime_error("loss CSV: unexpected header '" + line + "'");
  }
  const std::size_t ns = (head.size() - 3) / 2;
  LossTrace trace;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != head.size()) throw std::runtime_error("loss CSV: wrong field count in '" + line + "'");
    LossRecord r;
    r.iteration = to_u64(f[0]);
    r.total = to_double(f[1]);
    for (std::size_t i = 0; i < ns; ++i) r.stream_loss.push_back(to_double(f[2 + i]));
    for (std::size_t i = 0; i < ns; ++i) r.alpha.push_back(to_double(f[2 + ns + i]));
    r.batch_power = to_double(f.back());
    trace.records.push_back(std::move(r));
  }
  return trace;
}

LossTrace read_loss_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  try {
    return read_loss_csv(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

// ---- benchmark --------------------------------------------------------------

BenchRow bench_point(const AutoencoderModel& model, const BenchOptions& options, const Rng& rng) {
  if (options.reps == 0 || options.batch == 0) throw ConfigError("bench: reps and batch must be positive");
  const AeDims& d = model.dims;
  const double sigma2 = NoiseModel::from_snr_db(model.power, options.snr_db).sigma2;
  const std::size_t total = options.warmup + options.reps;
  std::vector<double> mb_ms;
  std::vector<double> ae_ms;
  std::vector<double> single_ms;
  double sink = 0.0;

  for (std::size_t r = 0; r < total; ++r) {
    Rng rep = rng.substream(r);
    // model-based: one design per realization
    Rng mb_rng = rep.substream(0);
    const ChannelPair csi = sample_channels(mb_rng, d.elements, d.n_tx, d.n_rx);
    Rng init_rng = rep.substream(1);
    const PhaseConfig init = PhaseConfig::random(d.elements, init_rng);
    auto t0 = Clock::now();
    {
      const PhaseOptReport opt = optimize_phases(csi, init, options.phase_opt);
      try {
        const LinkDesign design = design_link(csi, opt.theta, model.power, sigma2, d.streams);
        sink += design.power.front();
      } catch (const RankDeficiencyError&) {
      }
    }
    const double mb = ms_since(t0);

    Rng ae_rng = rep.substream(2);
    const Batch batch = draw_batch(d, options.batch, 0.0, ae_rng);
    t0 = Clock::now();
    sink += infer_logits(model, batch, sigma2, nullptr)(0, 0);
    const double ae = ms_since(t0) / static_cast<double>(options.batch);

    Batch one;
    one.truth.push_back(batch.truth.front());
    one.estimate.push_back(batch.estimate.front());
    one.hot.assign(batch.hot.begin(), batch.hot.begin() + static_cast<std::ptrdiff_t>(d.streams));
    t0 = Clock::now();
    sink += infer_logits(model, one, sigma2, nullptr)(0, 0);
    const double single = ms_since(t0);

    if (r >= options.warmup) {
      mb_ms.push_back(mb);
      ae_ms.push_back(ae);
      single_ms.push_back(single);
    }
  }
  if (!std::isfinite(sink)) throw std::runtime_error("bench: non-finite result");
  BenchRow row;
  row.elements = d.elements;
  row.reps = options.reps;
  row.modelbased_ms = median(mb_ms);
  row.autoencoder_ms = median(ae_ms);
  row.autoencoder_single_ms = median(single_ms);
  return row;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "k,reps,modelbased_ms,autoencoder_ms,autoencoder_single_ms,ratio\n";
  for (const auto& r : rows) {
    out << r.elements << ',' << r.reps << ',' << fmt17(r.modelbased_ms) << ',' << fmt17(r.autoencoder_ms)
        << ',' << fmt17(r.autoencoder_single_ms) << ',' << fmt17(r.ratio()) << "\n";
  }
}

// ---- self test --------------------------------------------------------------

std::vector<CheckResult> run_selftest(std::uint64_t seed) {
  std::vector<CheckResult> out;
  auto check = [&](const std::string& name, const std::function<std::string()>& body) {
    CheckResult c{name, false, {}};
    try {
      c.detail = body();
      c.ok = c.detail.empty();
    } catch (const std::exception& e) {
      c.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(c));
  };
  const Rng root(seed);

  check("svd reconstruction", [&]() -> std::string {
    for (std::uint64_t i = 0; i < 200; ++i) {
      Rng r = root.substream(100 + i);
      const std::size_t m = 1 + r.below(6);
      const std::size_t n = 1 + r.below(6);
      CMatrix a(m, n);
      for (auto& z : a.entries()) z = r.complex_normal();
      const SvdFactors f = svd(a);
      CMatrix us = f.U;
      for (std::size_t row = 0; row < us.rows(); ++row)
        for (std::size_t c = 0; c < us.cols(); ++c) us(row, c) *= f.sigma[c];
      const double err = max_abs_diff(matmul(us, hermitian(f.V)), a);
      if (err > 1e-10) return "instance " + std::to_string(i) + " error " + fmt17(err);
    }
    return "";
  });

  check("feasibility bound", [&]() -> std::string {
    for (std::uint64_t i = 0; i < 200; ++i) {
      Rng r = root.substream(400 + i);
      const ChannelPair p = sample_channels(r, 16, 4, 2);
      const PhaseConfig th = PhaseConfig::random(16, r);
      const LinkDesign d = design_link(p, th, 4.0, 1.0, 2);
      const FeasibilityCheck fc = feasibility_bound(p, th, d.precoder);
      if (fc.norm > fc.bound + 1e-9) return "violated on instance " + std::to_string(i);
    }
    return "";
  });

  check("water-filling power sum", [&]() -> std::string {
    for (std::uint64_t i = 0; i < 500; ++i) {
      Rng r = root.substream(700 + i);
      const std::vector<double> s{r.uniform(0.01, 5.0), r.uniform(0.01, 5.0)};
      std::vector<double> sorted = s;
      std::sort(sorted.rbegin(), sorted.rend());
      const auto p = water_filling(sorted, 4.0, 2, r.uniform(0.01, 20.0));
      const double sum = p[0] + p[1];
      if (std::abs(sum - 2.0) > 1e-9 || p[0] < 0.0 || p[1] < 0.0) return "bad allocation on " + std::to_string(i);
    }
    return "";
  });

  check("phase optimizer monotone", [&]() -> std::string {
    for (std::uint64_t i = 0; i < 100; ++i) {
      Rng r = root.substream(1300 + i);
      const ChannelPair p = sample_channels(r, 8, 4, 2);
      const PhaseOptReport rep = optimize_phases(p, r);
      for (std::size_t t = 1; t < rep.objective_trace.size(); ++t) {
        if (rep.objective_trace[t] < rep.objective_trace[t - 1] * (1.0 - 1e-12)) {
          return "trace decreased on instance " + std::to_string(i);
        }
      }
    }
    return "";
  });

  check("modulation round trip", [&]() -> std::string {
    for (std::size_t m : {2, 4, 16, 64}) {
      const Constellation c = make_constellation(m);
      Rng r = root.substream(1500 + m);
      Bits bits(2 * c.bits_per_symbol() * 50);
      for (auto& b : bits) b = r.bit();
      if (demodulate_min_distance(modulate(bits, c, 2 * 50), c) != bits) return "M=" + std::to_string(m);
      if (onehot_to_bits(bits_to_onehot(std::span(bits).first(2 * c.bits_per_symbol()), m, 2)) !=
          Bits(bits.begin(), bits.begin() + static_cast<std::ptrdiff_t>(2 * c.bits_per_symbol()))) {
        return "one-hot M=" + std::to_string(m);
      }
    }
    return "";
  });

  check("noiseless model-based recovery", [&]() -> std::string {
    ModelBasedConfig cfg;
    cfg.sigma2 = 1e-12;
    const Constellation c = make_constellation(2);
    std::size_t errors = 0;
    for (std::uint64_t i = 0; i < 500; ++i) {
      Rng r = root.substream(2000 + i);
      const TrialBits b = run_modelbased_trial(cfg, c, r);
      errors += count_bit_errors(b.tx, b.rx);
    }
    return errors == 0 ? "" : std::to_string(errors) + " bit errors";
  });

  check("awgn bpsk matches theory", [&]() -> std::string {
    const double snr = 10.0 * std::log10(2.706);
    const BerPoint p = awgn_bpsk_point(snr, 200000, root.substream(3000));
    const double rel = std::abs(p.ber() - awgn_bpsk_theory(snr)) / awgn_bpsk_theory(snr);
    return rel < 0.15 ? "" : "relative error " + fmt17(rel);
  });

  check("power normalization contract", [&]() -> std::string {
    Rng r = root.substream(4000);
    nn::Tensor2 x(64, 8);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = r.normal();
    const nn::Tensor2 y = nn::power_normalize(x, 4.0);
    const double avg = y.rowwise().squaredNorm().mean();
    return std::abs(avg - 16.0) < 1e-9 ? "" : "average power " + fmt17(avg);
  });

  check("checkpoint round trip", [&]() -> std::string {
    Rng r = root.substream(5000);
    AeDims d;
    d.elements = 4;
    const AutoencoderModel m = AutoencoderModel::build(d, 4.0, nn::PowerNormalization::paper, r);
    const auto path = std::filesystem::temp_directory_path() /
                      ("rismimo_selftest_" + std::to_string(seed) + ".ckpt");
    save_checkpoint(m, path);
    const AutoencoderModel back = load_checkpoint(path, d);
    Rng br = root.substream(5001);
    const Batch b = draw_batch(d, 8, 0.1, br);
    const bool same = infer_logits(m, b, 1.0, nullptr) == infer_logits(back, b, 1.0, nullptr);
    std::filesystem::remove(path);
    std::filesystem::remove(manifest_path(path));
    return same ? "" : "reloaded model differs";
  });

  check("sweep determinism", [&]() -> std::string {
    ExperimentConfig cfg;
    cfg.snr_db = {0.0, 5.0};
    cfg.n_bits = 2000;
    cfg.seed = seed;
    cfg.methods = {Method::modelbased, Method::random_phase};
    auto a = run_sweep(cfg);
    auto b = run_sweep(cfg);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].n_errors != b[i].n_errors || a[i].n_bits != b[i].n_bits) return "point " + std::to_string(i);
    }
    return "";
  });

  return out;
}

}  // namespace rismimo
