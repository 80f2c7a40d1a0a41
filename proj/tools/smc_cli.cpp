#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "smc/harness.hpp"
#include "smc/matrix_io.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kNotConverged = 2, kIoError = 3, kVerifyFailed = 4 };

struct CommonFlags {
  std::string config;
  std::string out;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
};

void add_common(CLI::App *cmd, CommonFlags &f, bool need_config) {
  auto *c = cmd->add_option("--config", f.config, "experiment config (JSON)");
  if (need_config)
    c->required();
  cmd->add_option("--out", f.out, "output directory (overrides config)");
  cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "single seed (overrides config seed list)");
  cmd->add_option("--format", f.format, "trial output format")->check(CLI::IsMember({"csv", "json"}));
}

smc::ExperimentConfig load_config(const CommonFlags &f) {
  smc::ExperimentConfig cfg;
  if (!f.config.empty())
    cfg = smc::ExperimentConfig::load(f.config);
  if (!f.out.empty())
    cfg.output_dir = f.out;
  if (f.threads > 0)
    cfg.threads = f.threads;
  if (f.seed)
    cfg.sweep.seeds = {*f.seed};
  cfg.validate();
  return cfg;
}

void write_text(const std::filesystem::path &path, const std::string &text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
  if (!os)
    throw smc::IoError("cannot write " + path.string());
}

void make_dir(const std::filesystem::path &dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw smc::IoError("cannot create " + dir.string() + ": " + ec.message());
}

int cmd_sweep(const CommonFlags &f) {
  const smc::ExperimentConfig cfg = load_config(f);
  const smc::SweepResult result = smc::run_sweep(cfg);
  smc::write_outputs(cfg, result, f.format);
  std::cout << smc::summary_text(smc::report(result.trials));
  int failed = 0;
  for (const auto &t : result.trials)
    failed += t.status != "ok";
  if (failed) {
    std::cerr << failed << " of " << result.trials.size() << " trials did not converge or failed\n";
    if (cfg.require_convergence)
      return kNotConverged;
  }
  return kOk;
}

int cmd_geometry(const CommonFlags &f, bool kappa) {
  const smc::ExperimentConfig cfg = load_config(f);
  std::vector<smc::InstanceGeometry> instances(cfg.sweep.seeds.size());
  for (std::size_t i = 0; i < instances.size(); ++i)
    instances[i] = smc::measure_instance(cfg, cfg.sweep.seeds[i]);
  make_dir(cfg.output_dir);
  std::string text = smc::geometry_csv(instances);
  if (kappa) {
    // Append kappa_hat rows, one per (seed, m) pair, at the configured beta.
    std::ostringstream os;
    for (const auto &ig : instances) {
      const double wg2 = ig.width.value * ig.width.value;
      const double d = cfg.instance.rows + cfg.instance.cols;
      for (std::size_t mi = 0; mi < cfg.sweep.m.size(); ++mi) {
        const double mv = cfg.sweep.m[mi];
        const auto m = cfg.sweep.m_in_width_units ? static_cast<std::int64_t>(std::ceil(mv * wg2 * std::log(d)))
                                                  : static_cast<std::int64_t>(std::llround(mv));
        const smc::ObservationSet omega =
            smc::sample_omega(cfg.instance.rows, cfg.instance.cols, m, smc::derive_seed(ig.seed, 0x0e00 + mi));
        const double beta = cfg.geometry.kappa_beta_filter ? smc::beta_threshold(static_cast<double>(m), wg2, d, cfg.sweep.c0)
                                                           : std::numeric_limits<double>::infinity();
        smc::GeometryEstimate k;
        try {
          k = smc::rsc_verify(omega, ig.kappa_directions, beta);
        } catch (const std::runtime_error &) {
          k = smc::rsc_verify(omega, ig.kappa_directions, std::numeric_limits<double>::infinity());
          k.name = "rsc_kappa_unfiltered";
        }
        k.name += "_m" + std::to_string(m);
        os << ig.seed << ',' << smc::format_double(ig.alpha_sp) << ',' << k.csv_row() << '\n';
      }
    }
    text += os.str();
  }
  write_text(cfg.output_dir / "geometry.csv", text);
  std::cout << text;
  return kOk;
}

struct SolveFlags {
  std::string observations;
  std::string config;
  std::string out = "out";
  std::string norm = "nuclear";
  std::string estimator = "constrained-norm";
  std::string loss = "gaussian";
  std::optional<double> lambda;
  std::optional<double> nu;
  double alpha_star = 1e6;
  int lambda_draws = 200;
  std::uint64_t seed = 1;
  std::string format = "csv";
  int threads = 1;
};

int cmd_solve(const SolveFlags &f) {
  smc::EstimatorConfig est;
  smc::NormSpec spec = smc::NormSpec::nuclear();
  try {
    spec = smc::NormSpec::parse(f.norm);
    est.estimator = smc::parse_estimator_kind(f.estimator);
    est.loss = smc::GlmLoss::parse(f.loss);
  } catch (const std::invalid_argument &e) {
    throw smc::ConfigError(e.what());
  }
  if (!f.config.empty()) {
    const smc::ExperimentConfig cfg = smc::ExperimentConfig::load(f.config);
    est = cfg.estimator;
    spec = cfg.instance.norm;
  }
  est.alpha_star = f.alpha_star;
  const smc::Observations obs = smc::load_observations_mm(f.observations);
  if (f.lambda) {
    est.lambda = *f.lambda;
  } else if (f.nu) {
    est.lambda = smc::auto_lambda(est.estimator, *f.nu, obs.omega, spec, f.lambda_draws, f.seed);
  } else {
    throw smc::ConfigError("solve needs --lambda or --nu");
  }
  try {
    est.validate();
    spec.check_dims(obs.omega.rows(), obs.omega.cols());
  } catch (const std::invalid_argument &e) {
    throw smc::ConfigError(e.what());
  }
  const smc::SolveResult r = smc::solve(obs.values, obs.omega, spec, est);
  const std::filesystem::path dir = f.out;
  make_dir(dir);
  smc::save_matrix_mm(dir / "theta_hat.mtx", r.theta);
  if (f.format == "json") {
    write_text(dir / "solve.json", r.to_json("theta_hat.mtx") + "\n");
  } else {
    std::ostringstream os;
    os << "estimator,norm,lambda,objective,constraint_value,constraint_residual,iterations,converged,"
          "certificate,wall_time\n"
       << smc::to_string(est.estimator) << ',' << spec.to_string() << ',' << smc::format_double(est.lambda)
       << ',' << smc::format_double(r.objective) << ',' << smc::format_double(r.constraint_value) << ','
       << smc::format_double(r.constraint_residual) << ',' << r.iterations << ',' << (r.converged ? 1 : 0)
       << ',' << smc::format_double(r.certificate) << ',' << smc::format_double(r.wall_time) << '\n';
    write_text(dir / "solve.csv", os.str());
  }
  std::cout << r.to_json("theta_hat.mtx") << '\n';
  if (!r.converged) {
    std::cerr << "solver did not converge: " << r.message << '\n';
    return kNotConverged;
  }
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Structured matrix completion: estimators, cone geometry and scaling sweeps"};
  app.require_subcommand(1);

  SolveFlags sf;
  auto *solve = app.add_subcommand("solve", "solve one instance from a MatrixMarket observation file");
  solve->add_option("observations", sf.observations, "observations (MatrixMarket coordinate)")->required();
  solve->add_option("--config", sf.config, "take estimator and norm from a config file");
  solve->add_option("--out", sf.out, "output directory");
  solve->add_option("--norm", sf.norm, "frobenius | nuclear | kspectral:k=K");
  solve->add_option("--estimator", sf.estimator, "constrained-norm | dantzig | glm-regularized");
  solve->add_option("--loss", sf.loss, "GLM loss: gaussian | bernoulli | poisson");
  solve->add_option("--lambda", sf.lambda, "regularization level");
  solve->add_option("--nu", sf.nu, "noise level for automatic lambda");
  solve->add_option("--alpha-star", sf.alpha_star, "spikiness bound alpha*");
  solve->add_option("--lambda-draws", sf.lambda_draws, "noise draws for the Dantzig lambda");
  solve->add_option("--seed", sf.seed, "seed for automatic lambda");
  solve->add_option("--threads", sf.threads, "worker threads")->check(CLI::PositiveNumber);
  solve->add_option("--format", sf.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  CommonFlags sweep_flags, geo_flags;
  auto *sweep = app.add_subcommand("sweep", "run a configured (m, nu, seed) sweep");
  add_common(sweep, sweep_flags, true);
  auto *geometry = app.add_subcommand("geometry", "width, compatibility and RSC estimates");
  add_common(geometry, geo_flags, false);
  bool geo_kappa = true;
  geometry->add_flag("!--no-kappa", geo_kappa, "skip kappa estimates");

  std::uint64_t verify_seed = 20240601;
  int verify_threads = 1;
  auto *verify = app.add_subcommand("verify", "property checks on small instances");
  verify->add_option("--seed", verify_seed, "seed");
  verify->add_option("--threads", verify_threads, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*solve)
      return cmd_solve(sf);
    if (*sweep)
      return cmd_sweep(sweep_flags);
    if (*geometry)
      return cmd_geometry(geo_flags, geo_kappa);
    return smc::run_verify(std::cout, verify_seed, verify_threads) ? kOk : kVerifyFailed;
  } catch (const smc::ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const smc::IoError &e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::filesystem::filesystem_error &e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::invalid_argument &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
}
