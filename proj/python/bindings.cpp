#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "smc/geometry.hpp"
#include "smc/harness.hpp"
#include "smc/norms.hpp"
#include "smc/solvers.hpp"

namespace py = pybind11;
using namespace smc;

namespace {

using CellArray = Eigen::Matrix<int, Eigen::Dynamic, 2, Eigen::RowMajor>;

ObservationSet to_omega(const CellArray &cells, int rows, int cols) {
  std::vector<Cell> out(static_cast<std::size_t>(cells.rows()));
  for (Eigen::Index k = 0; k < cells.rows(); ++k)
    out[static_cast<std::size_t>(k)] = {cells(k, 0), cells(k, 1)};
  return ObservationSet(rows, cols, std::move(out));
}

CellArray from_omega(const ObservationSet &omega) {
  CellArray out(static_cast<Eigen::Index>(omega.size()), 2);
  for (std::size_t k = 0; k < omega.size(); ++k) {
    out(static_cast<Eigen::Index>(k), 0) = omega[k].row;
    out(static_cast<Eigen::Index>(k), 1) = omega[k].col;
  }
  return out;
}

NormSpec spec_of(const py::object &o) {
  if (py::isinstance<NormSpec>(o))
    return o.cast<NormSpec>();
  return NormSpec::parse(o.cast<std::string>());
}

McOptions mc_options(int samples, std::uint64_t seed, int threads) {
  McOptions mc;
  mc.samples = samples;
  mc.seed = seed;
  mc.threads = threads;
  return mc;
}

} // namespace

PYBIND11_MODULE(_smcomp, m) {
  m.doc() = "Structured matrix completion core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<NormSpec>(m, "NormSpec")
      .def(py::init([](const std::string &text) { return NormSpec::parse(text); }), py::arg("text"))
      .def_static("frobenius", &NormSpec::frobenius)
      .def_static("nuclear", &NormSpec::nuclear)
      .def_static("spectral_k_support", &NormSpec::spectral_k_support, py::arg("k"))
      .def_property_readonly("k", &NormSpec::k)
      .def("__str__", &NormSpec::to_string)
      .def("__repr__", [](const NormSpec &s) { return "NormSpec('" + s.to_string() + "')"; })
      .def(py::self == py::self);

  m.def("norm", [](const py::object &spec, const Matrix &x) { return norm_value(spec_of(spec), x); },
        py::arg("spec"), py::arg("x"));
  m.def("dual_norm", [](const py::object &spec, const Matrix &x) { return dual_norm_value(spec_of(spec), x); },
        py::arg("spec"), py::arg("x"));
  m.def("prox", [](const py::object &spec, const Matrix &z, double t) { return prox(spec_of(spec), z, t); },
        py::arg("spec"), py::arg("z"), py::arg("t"));
  m.def("spikiness", &spikiness, py::arg("x"));

  m.def("sample_omega",
        [](int rows, int cols, std::int64_t count, std::uint64_t seed) {
          return from_omega(sample_omega(rows, cols, count, seed));
        },
        py::arg("rows"), py::arg("cols"), py::arg("m"), py::arg("seed"),
        "m uniform cells with replacement as an (m, 2) array of 0-based indices.");
  m.def("generate_observations",
        [](const Matrix &theta, const CellArray &cells, double nu, const std::string &noise,
           std::uint64_t seed) {
          const ObservationSet omega = to_omega(cells, static_cast<int>(theta.rows()), static_cast<int>(theta.cols()));
          return generate_observations(theta, omega, NoiseModel{parse_noise_kind(noise), nu}, seed);
        },
        py::arg("theta"), py::arg("cells"), py::arg("nu"), py::arg("noise") = "gaussian", py::arg("seed") = 0);
  m.def("generate_instance",
        [](int rows, int cols, int rank, double target_spikiness, std::uint64_t seed) {
          InstanceConfig in;
          in.rows = rows;
          in.cols = cols;
          in.rank = rank;
          in.target_spikiness = target_spikiness;
          return generate_instance(in, seed);
        },
        py::arg("rows"), py::arg("cols"), py::arg("rank"), py::arg("target_spikiness") = 3.0,
        py::arg("seed") = 0);

  py::class_<SolveResult>(m, "SolveResult")
      .def_readonly("theta", &SolveResult::theta)
      .def_readonly("objective", &SolveResult::objective)
      .def_readonly("constraint_value", &SolveResult::constraint_value)
      .def_readonly("constraint_residual", &SolveResult::constraint_residual)
      .def_readonly("iterations", &SolveResult::iterations)
      .def_readonly("converged", &SolveResult::converged)
      .def_readonly("certificate", &SolveResult::certificate)
      .def_readonly("wall_time", &SolveResult::wall_time)
      .def_readonly("message", &SolveResult::message);

  m.def("solve",
        [](const Vector &y, const CellArray &cells, int rows, int cols, const py::object &spec,
           const std::string &estimator, double lam, const std::string &loss, double alpha_star,
           int max_iterations, double objective_tolerance, double constraint_tolerance) {
          EstimatorConfig cfg;
          cfg.estimator = parse_estimator_kind(estimator);
          cfg.lambda = lam;
          cfg.loss = GlmLoss::parse(loss);
          cfg.alpha_star = alpha_star;
          cfg.max_iterations = max_iterations;
          cfg.objective_tolerance = objective_tolerance;
          cfg.constraint_tolerance = constraint_tolerance;
          const ObservationSet omega = to_omega(cells, rows, cols);
          const NormSpec s = spec_of(spec);
          py::gil_scoped_release release;
          return solve(y, omega, s, cfg);
        },
        py::arg("y"), py::arg("cells"), py::arg("rows"), py::arg("cols"), py::arg("spec") = "nuclear",
        py::arg("estimator") = "constrained-norm", py::arg("lam") = 0.0, py::arg("loss") = "gaussian",
        py::arg("alpha_star") = 1e6, py::arg("max_iterations") = 20000,
        py::arg("objective_tolerance") = 1e-6, py::arg("constraint_tolerance") = 1e-6);
  m.def("auto_lambda",
        [](const std::string &estimator, double nu, const CellArray &cells, int rows, int cols,
           const py::object &spec, int draws, std::uint64_t seed) {
          return auto_lambda(parse_estimator_kind(estimator), nu, to_omega(cells, rows, cols), spec_of(spec),
                             draws, seed);
        },
        py::arg("estimator"), py::arg("nu"), py::arg("cells"), py::arg("rows"), py::arg("cols"),
        py::arg("spec") = "nuclear", py::arg("draws") = 200, py::arg("seed") = 0);

  py::enum_<EstimateDirection>(m, "EstimateDirection")
      .value("LowerBound", EstimateDirection::LowerBound)
      .value("UpperBound", EstimateDirection::UpperBound)
      .value("Unbiased", EstimateDirection::Unbiased);
  py::class_<GeometryEstimate>(m, "GeometryEstimate")
      .def_readonly("name", &GeometryEstimate::name)
      .def_readonly("value", &GeometryEstimate::value)
      .def_readonly("standard_error", &GeometryEstimate::standard_error)
      .def_readonly("samples", &GeometryEstimate::samples)
      .def_readonly("direction", &GeometryEstimate::direction)
      .def_readonly("seed", &GeometryEstimate::seed)
      .def_readonly("wall_time", &GeometryEstimate::wall_time)
      .def_readonly("draws", &GeometryEstimate::draws);
  py::class_<WidthBound>(m, "WidthBound")
      .def_readonly("value", &WidthBound::value)
      .def_readonly("r", &WidthBound::r)
      .def_readonly("rank", &WidthBound::rank)
      .def_readonly("empty_averaged_block", &WidthBound::empty_averaged_block);

  m.def("gaussian_width_lower",
        [](const py::object &spec, const Matrix &anchor, int samples, std::uint64_t seed, int threads) {
          const ConeSampler cone(spec_of(spec), anchor);
          py::gil_scoped_release release;
          return gaussian_width_lower(cone, mc_options(samples, seed, threads));
        },
        py::arg("spec"), py::arg("anchor"), py::arg("samples") = 200, py::arg("seed") = 0, py::arg("threads") = 1);
  m.def("gaussian_width_upper",
        [](const py::object &spec, const Matrix &anchor, int samples, std::uint64_t seed, int threads) {
          const NormSpec s = spec_of(spec);
          py::gil_scoped_release release;
          return gaussian_width_upper_polar(s, anchor, mc_options(samples, seed, threads));
        },
        py::arg("spec"), py::arg("anchor"), py::arg("samples") = 200, py::arg("seed") = 0, py::arg("threads") = 1);
  m.def("ksupport_width_bound", &ksupport_width_bound, py::arg("sigma"), py::arg("k"), py::arg("dbar"));
  m.def("partial_complexity",
        [](const py::object &spec, const Matrix &anchor, std::int64_t count, bool full, int samples,
           std::uint64_t seed, int threads) {
          const ConeSampler cone(spec_of(spec), anchor);
          const OmegaLaw law{static_cast<int>(anchor.rows()), static_cast<int>(anchor.cols()), count, full};
          py::gil_scoped_release release;
          return partial_complexity(cone, law, NoiseKind::Gaussian, mc_options(samples, seed, threads));
        },
        py::arg("spec"), py::arg("anchor"), py::arg("m"), py::arg("full") = false, py::arg("samples") = 200,
        py::arg("seed") = 0, py::arg("threads") = 1);
  m.def("rsc_verify",
        [](const py::object &spec, const Matrix &anchor, const CellArray &cells, double beta, int n,
           std::uint64_t seed) {
          const ConeSampler cone(spec_of(spec), anchor);
          const ObservationSet omega = to_omega(cells, static_cast<int>(anchor.rows()), static_cast<int>(anchor.cols()));
          return rsc_verify(omega, cone, beta, n, seed);
        },
        py::arg("spec"), py::arg("anchor"), py::arg("cells"), py::arg("beta"), py::arg("n") = 200,
        py::arg("seed") = 0);

  m.def("_run_sweep",
        [](const std::string &config_json, const std::string &base_dir, const std::string &format, bool write) {
          nlohmann::json j;
          try {
            j = nlohmann::json::parse(config_json);
          } catch (const nlohmann::json::exception &e) {
            throw ConfigError(e.what());
          }
          const ExperimentConfig cfg = ExperimentConfig::from_json(j, base_dir);
          SweepResult r;
          {
            py::gil_scoped_release release;
            r = run_sweep(cfg);
          }
          if (write)
            write_outputs(cfg, r, format);
          return py::make_tuple(trials_json(r.trials), summary_csv(report(r.trials)));
        },
        py::arg("config_json"), py::arg("base_dir") = ".", py::arg("format") = "csv", py::arg("write") = false);
  m.def("verify",
        [](std::uint64_t seed) {
          std::ostringstream os;
          const bool ok = run_verify(os, seed);
          return py::make_tuple(ok, os.str());
        },
        py::arg("seed") = 20240601);
}
