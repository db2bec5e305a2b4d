// Python bindings: numpy arrays in, numpy arrays and dicts out.

#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rismimo/autoencoder.hpp"
#include "rismimo/checkpoint.hpp"
#include "rismimo/errors.hpp"
#include "rismimo/harness.hpp"

namespace py = pybind11;
using namespace rismimo;

namespace {

using CArray = py::array_t<cdouble, py::array::c_style | py::array::forcecast>;

CMatrix to_cmatrix(const CArray& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return CMatrix(rows, cols, std::vector<cdouble>(a.data(), a.data() + rows * cols));
}

CArray to_numpy(const CMatrix& m) {
  CArray out({m.rows(), m.cols()});
  std::copy(m.entries().begin(), m.entries().end(), out.mutable_data());
  return out;
}

ChannelPair pair_from(const CArray& g, const CArray& h) { return {to_cmatrix(g), to_cmatrix(h)}; }

py::dict point_dict(const BerPoint& p) {
  py::dict d;
  d["method"] = p.method;
  d["k"] = p.elements;
  d["snr_db"] = p.snr_db;
  d["sigma_e"] = p.sigma_e;
  d["n_bits"] = p.n_bits;
  d["n_errors"] = p.n_errors;
  d["ber"] = p.ber();
  d["skipped"] = p.skipped;
  d["wall_time_ms"] = p.wall_time_ms;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "RIS-assisted MIMO link: model-based design and end-to-end autoencoder";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<RankDeficiencyError>(m, "RankDeficiencyError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_IOError);

  m.def(
      "svd",
      [](const CArray& a) {
        const SvdFactors f = svd(to_cmatrix(a));
        return py::make_tuple(to_numpy(f.U), f.sigma, to_numpy(f.V));
      },
      py::arg("a"), "Thin SVD a = U diag(sigma) V^H.");

  m.def(
      "water_filling",
      [](const std::vector<double>& sigma, double power, std::size_t streams, double sigma2) {
        return water_filling(sigma, power, streams, sigma2);
      },
      py::arg("sigma"), py::arg("power"), py::arg("streams"), py::arg("sigma2"));

  m.def(
      "sample_channels",
      [](std::uint64_t seed, std::size_t k, std::size_t n_tx, std::size_t n_rx) {
        Rng rng(seed);
        const ChannelPair p = sample_channels(rng, k, n_tx, n_rx);
        return py::make_tuple(to_numpy(p.g), to_numpy(p.h));
      },
      py::arg("seed"), py::arg("k") = 16, py::arg("n_tx") = 4, py::arg("n_rx") = 2,
      "Returns (G, H) with G of shape (K, N_t) and H of shape (K, N_r).");

  m.def(
      "effective_channel",
      [](const CArray& g, const CArray& h, const std::vector<double>& theta) {
        return to_numpy(effective_channel(pair_from(g, h), PhaseConfig(theta)));
      },
      py::arg("g"), py::arg("h"), py::arg("theta"));

  m.def(
      "path_gain_objective",
      [](const CArray& g, const CArray& h, const std::vector<double>& theta) {
        return path_gain_objective(pair_from(g, h), PhaseConfig(theta));
      },
      py::arg("g"), py::arg("h"), py::arg("theta"));

  m.def(
      "optimize_phases",
      [](const CArray& g, const CArray& h, std::uint64_t seed, std::size_t max_iter, double tol) {
        Rng rng(seed);
        const PhaseOptReport r = optimize_phases(pair_from(g, h), rng, {max_iter, tol, true});
        const auto a = r.theta.angles();
        return py::make_tuple(std::vector<double>(a.begin(), a.end()), r.objective_trace);
      },
      py::arg("g"), py::arg("h"), py::arg("seed") = 1, py::arg("max_iter") = 200, py::arg("tol") = 1e-6,
      "Returns (theta, objective trace).");

  m.def(
      "design_link",
      [](const CArray& g, const CArray& h, const std::vector<double>& theta, double power, double sigma2,
         std::size_t streams) {
        const LinkDesign d = design_link(pair_from(g, h), PhaseConfig(theta), power, sigma2, streams);
        py::dict out;
        out["precoder"] = to_numpy(d.precoder);
        out["equalizer"] = to_numpy(d.equalizer);
        out["power"] = d.power;
        out["sigma"] = d.svd.sigma;
        return out;
      },
      py::arg("g"), py::arg("h"), py::arg("theta"), py::arg("power") = 4.0, py::arg("sigma2") = 1.0,
      py::arg("streams") = 2);

  m.def("q_function", &q_function, py::arg("x"));
  m.def("awgn_bpsk_theory", &awgn_bpsk_theory, py::arg("snr_db"));
  m.def(
      "awgn_bpsk_ber",
      [](double snr_db, std::uint64_t n_bits, std::uint64_t seed) {
        return point_dict(awgn_bpsk_point(snr_db, n_bits, Rng(seed)));
      },
      py::arg("snr_db"), py::arg("n_bits") = 1000000, py::arg("seed") = 1);

  m.def(
      "modelbased_ber",
      [](double snr_db, double sigma_e, std::uint64_t n_bits, const std::string& method, std::size_t k,
         std::uint64_t seed) {
        ExperimentConfig c;
        c.dims.elements = k;
        c.n_bits = n_bits;
        c.seed = seed;
        const Method mt = parse_method(method);
        if (mt == Method::autoencoder) throw ConfigError("use Autoencoder.evaluate_ber for the autoencoder");
        py::gil_scoped_release release;
        const BerPoint p = modelbased_point(c, mt, snr_db, sigma_e, Rng(seed));
        py::gil_scoped_acquire acquire;
        return point_dict(p);
      },
      py::arg("snr_db"), py::arg("sigma_e") = 0.1, py::arg("n_bits") = 100000, py::arg("method") = "modelbased",
      py::arg("k") = 16, py::arg("seed") = 1);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_property(
          "k", [](const TrainConfig& c) { return c.dims.elements; },
          [](TrainConfig& c, std::size_t k) { c.dims.elements = k; })
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("train_snr_db", &TrainConfig::train_snr_db)
      .def_readwrite("n_samples", &TrainConfig::n_samples)
      .def_readwrite("sigma_e", &TrainConfig::sigma_e)
      .def_readwrite("power", &TrainConfig::power)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_property_readonly("iterations", &TrainConfig::iterations)
      .def("validate", &TrainConfig::validate);

  py::class_<AutoencoderModel>(m, "Autoencoder")
      .def_property_readonly("k", [](const AutoencoderModel& a) { return a.dims.elements; })
      .def_readonly("power", &AutoencoderModel::power)
      .def(
          "evaluate_ber",
          [](const AutoencoderModel& a, double snr_db, double sigma_e, std::uint64_t n_bits, std::uint64_t seed) {
            py::gil_scoped_release release;
            const BerPoint p = evaluate_ber(a, snr_db, sigma_e, n_bits, Rng(seed));
            py::gil_scoped_acquire acquire;
            return point_dict(p);
          },
          py::arg("snr_db"), py::arg("sigma_e") = 0.1, py::arg("n_bits") = 100000, py::arg("seed") = 1)
      .def("save", [](const AutoencoderModel& a, const std::filesystem::path& p) { save_checkpoint(a, p); })
      .def_static(
          "load", [](const std::filesystem::path& p) { return load_checkpoint(p); }, py::arg("path"));

  m.def(
      "train",
      [](const TrainConfig& config) {
        auto [model, trace] = [&] {
          py::gil_scoped_release release;
          return train(config);
        }();
        py::list losses;
        for (const LossRecord& r : trace.records) {
          py::dict d;
          d["iteration"] = r.iteration;
          d["total"] = r.total;
          d["stream_loss"] = r.stream_loss;
          d["alpha"] = r.alpha;
          d["batch_power"] = r.batch_power;
          losses.append(d);
        }
        return py::make_tuple(std::move(model), losses);
      },
      py::arg("config"), "Returns (model, list of per-iteration loss records).");

  m.def(
      "selftest",
      [](std::uint64_t seed) {
        py::list out;
        for (const CheckResult& c : run_selftest(seed)) out.append(py::make_tuple(c.name, c.ok, c.detail));
        return out;
      },
      py::arg("seed") = 1);
}
