#include "smc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "smc/matrix_io.hpp"
#include "smc/parallel.hpp"
#include "smc/random.hpp"

namespace smc {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double log_d(int rows, int cols) { return std::log(static_cast<double>(rows) + cols); }

template <class T> T get_or(const json &j, const char *key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null())
    return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception &e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

std::string fmt(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

Matrix orthonormal_columns(Rng &rng, int n, int k, FactorLaw law) {
  Matrix a = rng.gaussian_matrix(n, k);
  if (law == FactorLaw::Rademacher)
    a = a.unaryExpr([](double x) { return x < 0.0 ? -1.0 : 1.0; });
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(n, k);
}

} // namespace

void ExperimentConfig::validate() const {
  const InstanceConfig &in = instance;
  if (in.rows < 1 || in.cols < 1)
    throw ConfigError("instance dimensions must be positive");
  if (in.rank < 1 || in.rank > std::min(in.rows, in.cols))
    throw ConfigError("instance rank must lie in [1, min(rows, cols)]");
  if (!in.spectrum.empty() && static_cast<int>(in.spectrum.size()) != in.rank)
    throw ConfigError("spectrum length must equal the rank");
  for (double s : in.spectrum)
    if (!(s > 0.0) || !std::isfinite(s))
      throw ConfigError("spectrum entries must be positive");
  if (!(in.target_spikiness >= 1.0))
    throw ConfigError("target spikiness must be at least 1");
  try {
    in.norm.check_dims(in.rows, in.cols);
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
  if (sweep.m.empty() || sweep.nu.empty() || sweep.seeds.empty())
    throw ConfigError("sweep grids (m, nu, seeds) must be nonempty");
  for (double m : sweep.m)
    if (!(m > 0.0))
      throw ConfigError("sweep m values must be positive");
  for (double nu : sweep.nu)
    if (!(nu >= 0.0))
      throw ConfigError("sweep nu values must be nonnegative");
  std::vector<std::uint64_t> seeds = sweep.seeds;
  std::sort(seeds.begin(), seeds.end());
  if (std::adjacent_find(seeds.begin(), seeds.end()) != seeds.end())
    throw ConfigError("sweep seeds must be distinct");
  if (!(sweep.c0 > 0.0))
    throw ConfigError("c0 must be positive");
  if (sweep.lambda && !(*sweep.lambda >= 0.0))
    throw ConfigError("fixed lambda must be nonnegative");
  if (estimator.estimator == EstimatorKind::GlmRegularized && !sweep.lambda)
    throw ConfigError("the GLM estimator needs a fixed lambda in the sweep");
  if (lambda_draws < 1)
    throw ConfigError("lambda_draws must be positive");
  if (geometry.width_samples < 30 || geometry.kappa_directions < 1 || geometry.compat_samples < 1 ||
      geometry.ascent < 0 || geometry.pool < 0)
    throw ConfigError("geometry budgets must be positive (width_samples at least 30)");
  if (threads < 1)
    throw ConfigError("threads must be positive");
  try {
    EstimatorConfig probe = estimator;
    if (probe.estimator == EstimatorKind::Dantzig)
      probe.lambda = 1.0;
    probe.validate();
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig ExperimentConfig::from_json(const json &j, const fs::path &base_dir) {
  if (!j.is_object())
    throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;
  try {
    if (j.contains("instance")) {
      const json &in = j.at("instance");
      cfg.instance.rows = get_or(in, "rows", cfg.instance.rows);
      cfg.instance.cols = get_or(in, "cols", cfg.instance.cols);
      cfg.instance.rank = get_or(in, "rank", cfg.instance.rank);
      cfg.instance.spectrum = get_or(in, "spectrum", cfg.instance.spectrum);
      cfg.instance.target_spikiness = get_or(in, "target_spikiness", cfg.instance.target_spikiness);
      cfg.instance.norm = NormSpec::parse(get_or<std::string>(in, "norm", "nuclear"));
      const std::string law = get_or<std::string>(in, "factors", "rademacher");
      if (law != "rademacher" && law != "gaussian")
        throw ConfigError("instance.factors must be 'rademacher' or 'gaussian'");
      cfg.instance.factors = law == "gaussian" ? FactorLaw::Gaussian : FactorLaw::Rademacher;
    }
    if (j.contains("sweep")) {
      const json &sw = j.at("sweep");
      cfg.sweep.m = get_or(sw, "m", cfg.sweep.m);
      const std::string unit = get_or<std::string>(sw, "m_unit", "count");
      if (unit != "count" && unit != "width")
        throw ConfigError("sweep.m_unit must be 'count' or 'width'");
      cfg.sweep.m_in_width_units = unit == "width";
      cfg.sweep.nu = get_or(sw, "nu", cfg.sweep.nu);
      cfg.sweep.seeds = get_or(sw, "seeds", cfg.sweep.seeds);
      cfg.sweep.c0 = get_or(sw, "c0", cfg.sweep.c0);
      if (sw.contains("lambda") && !sw.at("lambda").is_null())
        cfg.sweep.lambda = get_or(sw, "lambda", 0.0);
    }
    if (j.contains("estimator")) {
      const json &es = j.at("estimator");
      EstimatorConfig &e = cfg.estimator;
      e.estimator = parse_estimator_kind(get_or<std::string>(es, "kind", "constrained-norm"));
      e.loss = GlmLoss::parse(get_or<std::string>(es, "loss", "gaussian"));
      if (es.contains("alpha_star") && !es.at("alpha_star").is_null()) {
        e.alpha_star = get_or(es, "alpha_star", e.alpha_star);
        cfg.alpha_from_target = false;
      }
      e.max_iterations = get_or(es, "max_iterations", e.max_iterations);
      e.objective_tolerance = get_or(es, "objective_tolerance", e.objective_tolerance);
      e.constraint_tolerance = get_or(es, "constraint_tolerance", e.constraint_tolerance);
      cfg.lambda_draws = get_or(es, "lambda_draws", cfg.lambda_draws);
    }
    cfg.noise = parse_noise_kind(get_or<std::string>(j, "noise", "gaussian"));
    if (j.contains("geometry")) {
      const json &g = j.at("geometry");
      GeometryBudget &b = cfg.geometry;
      b.width_samples = get_or(g, "width_samples", b.width_samples);
      b.kappa_directions = get_or(g, "kappa_directions", b.kappa_directions);
      b.compat_samples = get_or(g, "compat_samples", b.compat_samples);
      b.ascent = get_or(g, "ascent", b.ascent);
      b.pool = get_or(g, "pool", b.pool);
      b.kappa_beta_filter = get_or(g, "kappa_beta_filter", b.kappa_beta_filter);
      b.flat_proposals = get_or(g, "flat_proposals", b.flat_proposals);
      b.compatibility = get_or(g, "compatibility", b.compatibility);
    }
    fs::path out = get_or<std::string>(j, "output", "out");
    cfg.output_dir = out.is_absolute() ? out : base_dir / out;
    cfg.threads = get_or(j, "threads", cfg.threads);
    cfg.save_matrices = get_or(j, "save_matrices", cfg.save_matrices);
    cfg.require_convergence = get_or(j, "require_convergence", cfg.require_convergence);
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path &path) {
  std::ifstream is(path);
  if (!is)
    throw IoError("cannot open config file " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::parse_error &e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["instance"] = {{"rows", instance.rows},
                   {"cols", instance.cols},
                   {"rank", instance.rank},
                   {"spectrum", instance.spectrum},
                   {"target_spikiness", instance.target_spikiness},
                   {"factors", instance.factors == FactorLaw::Gaussian ? "gaussian" : "rademacher"},
                   {"norm", instance.norm.to_string()}};
  j["sweep"] = {{"m", sweep.m},
                {"m_unit", sweep.m_in_width_units ? "width" : "count"},
                {"nu", sweep.nu},
                {"seeds", sweep.seeds},
                {"c0", sweep.c0}};
  j["sweep"]["lambda"] = sweep.lambda ? nlohmann::ordered_json(*sweep.lambda) : nullptr;
  j["estimator"] = {{"kind", to_string(estimator.estimator)},
                    {"loss", estimator.loss.to_string()},
                    {"max_iterations", estimator.max_iterations},
                    {"objective_tolerance", estimator.objective_tolerance},
                    {"constraint_tolerance", estimator.constraint_tolerance},
                    {"lambda_draws", lambda_draws}};
  j["estimator"]["alpha_star"] =
      alpha_from_target ? nullptr : nlohmann::ordered_json(estimator.alpha_star);
  j["noise"] = to_string(noise);
  j["geometry"] = {{"width_samples", geometry.width_samples},
                   {"kappa_directions", geometry.kappa_directions},
                   {"compat_samples", geometry.compat_samples},
                   {"ascent", geometry.ascent},
                   {"pool", geometry.pool},
                   {"kappa_beta_filter", geometry.kappa_beta_filter},
                   {"flat_proposals", geometry.flat_proposals},
                   {"compatibility", geometry.compatibility}};
  j["output"] = output_dir.string();
  j["threads"] = threads;
  j["save_matrices"] = save_matrices;
  j["require_convergence"] = require_convergence;
  return j;
}

Matrix generate_instance(const InstanceConfig &cfg, std::uint64_t seed) {
  if (cfg.rank < 1 || cfg.rank > std::min(cfg.rows, cfg.cols))
    throw std::invalid_argument("rank must lie in [1, min(rows, cols)]");
  if (!(cfg.target_spikiness >= 1.0))
    throw std::invalid_argument("spikiness target below 1 is unreachable (spikiness >= 1 always)");
  Vector sigma = Vector::Ones(cfg.rank);
  if (!cfg.spectrum.empty()) {
    if (static_cast<int>(cfg.spectrum.size()) != cfg.rank)
      throw std::invalid_argument("spectrum length must equal the rank");
    sigma = Eigen::Map<const Vector>(cfg.spectrum.data(), cfg.rank);
  }
  for (int attempt = 0; attempt < 100; ++attempt) {
    Rng rng(seed, 0x1157 + attempt);
    const Matrix u = orthonormal_columns(rng, cfg.rows, cfg.rank, cfg.factors);
    const Matrix v = orthonormal_columns(rng, cfg.cols, cfg.rank, cfg.factors);
    Matrix theta = u * sigma.asDiagonal() * v.transpose();
    theta /= theta.norm();
    if (spikiness(theta) <= cfg.target_spikiness)
      return theta;
  }
  throw std::runtime_error("spikiness target " + format_double(cfg.target_spikiness) +
                           " not reached in 100 attempts");
}

namespace {

} // namespace

InstanceGeometry measure_instance(const ExperimentConfig &cfg, std::uint64_t seed) {
  InstanceGeometry ig;
  ig.seed = seed;
  ig.theta = generate_instance(cfg.instance, seed);
  ig.alpha_sp = spikiness(ig.theta);
  const NormSpec &spec = cfg.instance.norm;
  const GeometryBudget &b = cfg.geometry;
  const ConeSampler cone(spec, ig.theta);
  McOptions mc;
  mc.samples = b.width_samples;
  mc.ascent = b.ascent;
  mc.pool = b.pool;
  mc.seed = derive_seed(seed, 0x3d);
  ig.width = gaussian_width_lower(cone, mc);
  ig.width_upper = gaussian_width_upper_polar(spec, ig.theta, mc);
  if (b.compatibility || cfg.estimator.estimator == EstimatorKind::Dantzig) {
    McOptions cm = mc;
    cm.samples = b.compat_samples;
    cm.seed = derive_seed(seed, 0x9c);
    ig.compatibility = compatibility_constant(cone, spec, cm);
  }
  ConeSamplerOptions kopt;
  kopt.flat_proposals = b.flat_proposals;
  const ConeSampler mixed(spec, ig.theta, kopt);
  for (int i = 0; i < b.kappa_directions; ++i) {
    Rng rng(derive_seed(seed, 0x4a), static_cast<std::uint64_t>(i));
    if (auto x = mixed.sample(rng))
      ig.kappa_directions.push_back(std::move(*x));
  }
  return ig;
}

namespace {

void run_trial(const ExperimentConfig &cfg, const InstanceGeometry &ig, std::size_t m_index,
               std::size_t nu_index, TrialRecord &rec) {
  const InstanceConfig &in = cfg.instance;
  const int rows = in.rows, cols = in.cols;
  const double d = static_cast<double>(rows) + cols;
  const double wg2 = ig.width.value * ig.width.value;
  rec.seed = ig.seed;
  rec.m_value = cfg.sweep.m[m_index];
  rec.nu = cfg.sweep.nu[nu_index];
  rec.rows = rows;
  rec.cols = cols;
  rec.rank = in.rank;
  rec.norm = in.norm.to_string();
  rec.estimator = to_string(cfg.estimator.estimator);
  rec.alpha_sp = ig.alpha_sp;
  rec.wg_lower = ig.width.value;
  rec.geometry_time = ig.width.wall_time;
  if (ig.compatibility)
    rec.psi = ig.compatibility->value;
  else
    rec.notes += "psi not measured (compatibility disabled);";
  rec.m = cfg.sweep.m_in_width_units
              ? static_cast<std::int64_t>(std::ceil(rec.m_value * wg2 * log_d(rows, cols)))
              : static_cast<std::int64_t>(std::llround(rec.m_value));

  EstimatorConfig est = cfg.estimator;
  if (cfg.alpha_from_target)
    est.alpha_star = in.target_spikiness;
  rec.alpha_star = est.alpha_star;

  const ObservationSet omega = sample_omega(rows, cols, rec.m, derive_seed(ig.seed, 0x0e00 + m_index));
  // The same noise draw is scaled by every nu in the grid.
  const Vector y = generate_observations(ig.theta, omega, NoiseModel{cfg.noise, rec.nu},
                                         derive_seed(ig.seed, 0x7700 + m_index));
  if (cfg.sweep.lambda) {
    rec.lambda = *cfg.sweep.lambda;
  } else {
    rec.lambda = auto_lambda(est.estimator, rec.nu, omega, in.norm, cfg.lambda_draws,
                             derive_seed(ig.seed, 0x1a00 + m_index), cfg.noise);
  }
  est.lambda = rec.lambda;
  if (est.estimator == EstimatorKind::Dantzig && !(est.lambda > 0.0)) {
    est.lambda = 1e-9;
    rec.notes += "lambda_ds floored at 1e-9;";
  }

  const SolveResult res = solve(y, omega, in.norm, est);
  rec.error = (res.theta - ig.theta).squaredNorm() / (static_cast<double>(rows) * cols);
  rec.converged = res.converged;
  rec.iterations = res.iterations;
  rec.solve_time = res.wall_time;
  if (!res.converged) {
    rec.status = "not-converged";
    rec.notes += res.message + ";";
  }

  rec.beta = beta_threshold(static_cast<double>(rec.m), wg2, d, cfg.sweep.c0);
  const double beta = cfg.geometry.kappa_beta_filter ? rec.beta
                                                     : std::numeric_limits<double>::infinity();
  try {
    rec.kappa = rsc_verify(omega, ig.kappa_directions, beta).value;
    rec.kappa_filtered = cfg.geometry.kappa_beta_filter;
  } catch (const std::runtime_error &) {
    rec.kappa = rsc_verify(omega, ig.kappa_directions, std::numeric_limits<double>::infinity()).value;
    rec.kappa_filtered = false;
    rec.notes += "no sampled direction below beta, kappa unfiltered;";
  }

  rec.floor_term = spiky_error_floor(est.alpha_star, cfg.sweep.c0, wg2, d, static_cast<double>(rec.m)) /
                   (4.0 * rows * cols);
  switch (est.estimator) {
  case EstimatorKind::ConstrainedNorm:
    rec.noise_term = rec.nu * rec.nu / rec.kappa;
    rec.bound = 4.0 * std::max(rec.noise_term, rec.floor_term);
    break;
  case EstimatorKind::Dantzig:
    rec.noise_term = rec.lambda * rec.lambda * rec.psi * rec.psi / (rec.kappa * rec.kappa);
    rec.bound = 16.0 * std::max(rec.noise_term, rec.floor_term);
    break;
  case EstimatorKind::GlmRegularized:
    rec.notes += "no error bound for the GLM estimator;";
    break;
  }
  rec.bound_satisfied = std::isfinite(rec.bound) && rec.error <= rec.bound;

  if (cfg.save_matrices) {
    std::ostringstream name;
    name << "theta_hat_seed" << ig.seed << "_m" << m_index << "_nu" << nu_index << ".mtx";
    fs::create_directories(cfg.output_dir);
    save_matrix_mm(cfg.output_dir / name.str(), res.theta);
  }
}

} // namespace

SweepResult run_sweep(const ExperimentConfig &cfg) {
  cfg.validate();
  SweepResult out;
  const auto &seeds = cfg.sweep.seeds;
  out.instances.resize(seeds.size());
  parallel_for(seeds.size(), cfg.threads,
               [&](std::size_t i) { out.instances[i] = measure_instance(cfg, seeds[i]); });
  if (cfg.save_matrices) {
    fs::create_directories(cfg.output_dir);
    for (const auto &ig : out.instances)
      save_matrix_mm(cfg.output_dir / ("theta_star_seed" + std::to_string(ig.seed) + ".mtx"),
                     ig.theta);
  }

  const std::size_t nm = cfg.sweep.m.size(), nn = cfg.sweep.nu.size();
  out.trials.resize(seeds.size() * nm * nn);
  parallel_for(out.trials.size(), cfg.threads, [&](std::size_t t) {
    const std::size_t s = t / (nm * nn), mi = (t / nn) % nm, ni = t % nn;
    TrialRecord &rec = out.trials[t];
    try {
      run_trial(cfg, out.instances[s], mi, ni, rec);
    } catch (const std::exception &e) {
      rec.seed = seeds[s];
      rec.m_value = cfg.sweep.m[mi];
      rec.nu = cfg.sweep.nu[ni];
      rec.status = "error";
      rec.notes += e.what();
      rec.error = kNaN;
    }
  });
  // Present trials grouped by (m, nu), then seed.
  std::stable_sort(out.trials.begin(), out.trials.end(), [&](const TrialRecord &a, const TrialRecord &b) {
    auto key = [&](const TrialRecord &r) {
      const auto mi = std::find(cfg.sweep.m.begin(), cfg.sweep.m.end(), r.m_value) - cfg.sweep.m.begin();
      const auto ni = std::find(cfg.sweep.nu.begin(), cfg.sweep.nu.end(), r.nu) - cfg.sweep.nu.begin();
      return std::pair(mi, ni);
    };
    return key(a) < key(b);
  });
  return out;
}

std::vector<SummaryRow> report(const std::vector<TrialRecord> &records) {
  if (records.empty())
    throw std::invalid_argument("report needs at least one trial record");
  std::vector<SummaryRow> rows;
  std::vector<std::vector<const TrialRecord *>> groups;
  for (const TrialRecord &r : records) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryRow &s) {
      return s.m_value == r.m_value && s.nu == r.nu;
    });
    if (it == rows.end()) {
      rows.push_back(SummaryRow{r.m_value, r.nu});
      groups.emplace_back();
      it = rows.end() - 1;
    }
    groups[it - rows.begin()].push_back(&r);
  }
  for (std::size_t g = 0; g < rows.size(); ++g) {
    SummaryRow &row = rows[g];
    row.trials = static_cast<int>(groups[g].size());
    std::vector<double> errors;
    double m_sum = 0.0, bound_sum = 0.0, kappa_sum = 0.0;
    int satisfied = 0, converged = 0, bounded = 0;
    for (const TrialRecord *r : groups[g]) {
      if (r->status == "error")
        continue;
      errors.push_back(r->error);
      m_sum += static_cast<double>(r->m);
      kappa_sum += r->kappa;
      if (std::isfinite(r->bound)) {
        bound_sum += r->bound;
        ++bounded;
      }
      satisfied += r->bound_satisfied;
      converged += r->converged;
    }
    const double n = static_cast<double>(errors.size());
    if (errors.empty()) {
      row.mean_error = row.stderr_error = row.mean_m = row.mean_kappa = kNaN;
    } else {
      row.mean_m = m_sum / n;
      row.mean_error = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
      double ss = 0.0;
      for (double e : errors)
        ss += (e - row.mean_error) * (e - row.mean_error);
      row.stderr_error = errors.size() > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
      row.mean_kappa = kappa_sum / n;
    }
    row.mean_bound = bounded ? bound_sum / bounded : kNaN;
    row.bound_fraction = satisfied / static_cast<double>(row.trials);
    row.converged_fraction = converged / static_cast<double>(row.trials);
  }
  return rows;
}

std::string trials_csv(const std::vector<TrialRecord> &records, EstimatorKind kind) {
  std::ostringstream os;
  const char *noise_term = kind == EstimatorKind::Dantzig ? "noise_term[lambda^2*psi_hat^2/kappa_hat^2]"
                                                          : "noise_term[nu^2/kappa_hat]";
  const char *bound = kind == EstimatorKind::Dantzig ? "bound[16*max(noise_term;floor_term)]"
                                                     : "bound[4*max(noise_term;floor_term)]";
  os << "seed,m_value,m,nu,rows,cols,rank,norm,estimator,alpha_star,alpha_sp,lambda,"
        "error[||D||_F^2/(d1*d2)],wg_hat[lower-bound],psi_hat[lower-bound],"
        "beta[(m/(c0^2*wg_hat^2*log(d1+d2)))^(1/4)],kappa_hat[min over sampled cone directions],"
        "kappa_filtered,"
     << noise_term << ",floor_term[alpha_star^2/(d1*d2)*sqrt(c0^2*wg_hat^2*log(d1+d2)/m)]," << bound
     << ",bound_satisfied,converged,iterations,solve_time,geometry_time,status,notes\n";
  for (const TrialRecord &r : records) {
    std::string notes = r.notes;
    std::replace(notes.begin(), notes.end(), ',', ';');
    std::replace(notes.begin(), notes.end(), '\n', ' ');
    os << r.seed << ',' << fmt(r.m_value) << ',' << r.m << ',' << fmt(r.nu) << ',' << r.rows << ','
       << r.cols << ',' << r.rank << ',' << r.norm << ',' << r.estimator << ',' << fmt(r.alpha_star)
       << ',' << fmt(r.alpha_sp) << ',' << fmt(r.lambda) << ',' << fmt(r.error) << ','
       << fmt(r.wg_lower) << ',' << fmt(r.psi) << ',' << fmt(r.beta) << ',' << fmt(r.kappa) << ','
       << (r.kappa_filtered ? 1 : 0) << ',' << fmt(r.noise_term) << ',' << fmt(r.floor_term) << ','
       << fmt(r.bound) << ',' << (r.bound_satisfied ? 1 : 0) << ',' << (r.converged ? 1 : 0) << ','
       << r.iterations << ',' << fmt(r.solve_time) << ',' << fmt(r.geometry_time) << ','
       << r.status << ',' << notes << '\n';
  }
  return os.str();
}

std::string trials_json(const std::vector<TrialRecord> &records) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nullptr; };
  for (const TrialRecord &r : records) {
    nlohmann::ordered_json j;
    j["seed"] = r.seed;
    j["m_value"] = r.m_value;
    j["m"] = r.m;
    j["nu"] = r.nu;
    j["rows"] = r.rows;
    j["cols"] = r.cols;
    j["rank"] = r.rank;
    j["norm"] = r.norm;
    j["estimator"] = r.estimator;
    j["alpha_star"] = num(r.alpha_star);
    j["alpha_sp"] = num(r.alpha_sp);
    j["lambda"] = num(r.lambda);
    j["error"] = num(r.error);
    j["wg_hat"] = num(r.wg_lower);
    j["psi_hat"] = num(r.psi);
    j["beta"] = num(r.beta);
    j["kappa_hat"] = num(r.kappa);
    j["kappa_filtered"] = r.kappa_filtered;
    j["noise_term"] = num(r.noise_term);
    j["floor_term"] = num(r.floor_term);
    j["bound"] = num(r.bound);
    j["bound_satisfied"] = r.bound_satisfied;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["solve_time"] = r.solve_time;
    j["geometry_time"] = r.geometry_time;
    j["status"] = r.status;
    j["notes"] = r.notes;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::string summary_csv(const std::vector<SummaryRow> &rows) {
  std::ostringstream os;
  os << "m_value,nu,trials,mean_m,mean_error,stderr_error,mean_bound,bound_satisfied_fraction,"
        "mean_kappa_hat,converged_fraction\n";
  for (const SummaryRow &r : rows)
    os << fmt(r.m_value) << ',' << fmt(r.nu) << ',' << r.trials << ',' << fmt(r.mean_m) << ','
       << fmt(r.mean_error) << ',' << fmt(r.stderr_error) << ',' << fmt(r.mean_bound) << ','
       << fmt(r.bound_fraction) << ',' << fmt(r.mean_kappa) << ',' << fmt(r.converged_fraction)
       << '\n';
  return os.str();
}

std::string summary_text(const std::vector<SummaryRow> &rows) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "m_value" << std::setw(8) << "nu" << std::setw(7) << "n"
     << std::setw(10) << "mean_m" << std::setw(26) << "error (mean +- se)" << std::setw(13)
     << "bound" << std::setw(10) << "within" << std::setw(9) << "kappa" << "converged\n";
  os << std::setprecision(4);
  for (const SummaryRow &r : rows) {
    std::ostringstream err;
    err << std::setprecision(4) << r.mean_error << " +- " << r.stderr_error;
    os << std::left << std::setw(10) << r.m_value << std::setw(8) << r.nu << std::setw(7)
       << r.trials << std::setw(10) << r.mean_m << std::setw(26) << err.str() << std::setw(13)
       << r.mean_bound << std::setw(10) << r.bound_fraction << std::setw(9) << r.mean_kappa
       << r.converged_fraction << '\n';
  }
  return os.str();
}

std::string geometry_csv(const std::vector<InstanceGeometry> &instances) {
  std::ostringstream os;
  os << "instance_seed,alpha_sp," << GeometryEstimate::csv_header() << '\n';
  for (const InstanceGeometry &ig : instances) {
    auto row = [&](const GeometryEstimate &e) {
      os << ig.seed << ',' << fmt(ig.alpha_sp) << ',' << e.csv_row() << '\n';
    };
    row(ig.width);
    if (ig.width_upper)
      row(*ig.width_upper);
    if (ig.compatibility)
      row(*ig.compatibility);
  }
  return os.str();
}

void write_outputs(const ExperimentConfig &cfg, const SweepResult &result,
                   const std::string &format) {
  if (format != "csv" && format != "json")
    throw ConfigError("output format must be csv or json");
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec)
    throw IoError("cannot create output directory " + cfg.output_dir.string() + ": " + ec.message());
  auto write = [&](const std::string &name, const std::string &text) {
    std::ofstream os(cfg.output_dir / name, std::ios::binary);
    os << text;
    if (!os)
      throw IoError("cannot write " + (cfg.output_dir / name).string());
  };
  const std::vector<SummaryRow> rows = report(result.trials);
  if (format == "csv") {
    write("trials.csv", trials_csv(result.trials, cfg.estimator.estimator));
  } else {
    write("trials.json", trials_json(result.trials));
  }
  write("summary.csv", summary_csv(rows));
  write("summary.txt", summary_text(rows));
  write("geometry.csv", geometry_csv(result.instances));
}

} // namespace smc

namespace smc {

namespace {

struct Check {
  std::string name;
  std::function<std::string()> run; // empty string means pass
};

std::string expect_close(double got, double want, double tol, const std::string &what) {
  if (std::abs(got - want) <= tol * std::max(1.0, std::abs(want)))
    return {};
  std::ostringstream os;
  os << what << ": got " << got << ", expected " << want;
  return os.str();
}

} // namespace

bool run_verify(std::ostream &os, std::uint64_t seed, int threads) {
  const std::vector<NormSpec> specs = {NormSpec::frobenius(), NormSpec::nuclear(),
                                       NormSpec::spectral_k_support(3)};
  std::vector<Check> checks;

  checks.push_back({"adjoint identity", [seed] {
    const ObservationSet omega = sample_omega(7, 9, 40, seed);
    Rng rng(seed, 1);
    const Matrix x = rng.gaussian_matrix(7, 9);
    const Vector v = rng.gaussian_vector(40);
    return expect_close(project_omega(x, omega).dot(v), frobenius_inner(x, adjoint_omega(v, omega)),
                        1e-12, "<P x, v> vs <x, P* v>");
  }});

  checks.push_back({"norm duality", [seed, specs] {
    Rng rng(seed, 2);
    for (const NormSpec &spec : specs) {
      const Matrix x = rng.gaussian_matrix(6, 8), y = rng.gaussian_matrix(6, 8);
      const double lhs = std::abs(frobenius_inner(x, y));
      if (lhs > norm_value(spec, x) * dual_norm_value(spec, y) * (1 + 1e-10))
        return "Hoelder inequality fails for " + spec.to_string();
      const SubgradientSample g = subgradient(spec, x);
      if (auto e = expect_close(frobenius_inner(g.w, x), norm_value(spec, x), 1e-9,
                                "<W, X> for " + spec.to_string());
          !e.empty())
        return e;
      if (auto e = expect_close(dual_norm_value(spec, g.w), 1.0, 1e-9, "R*(W) for " + spec.to_string());
          !e.empty())
        return e;
    }
    return std::string();
  }});

  checks.push_back({"prox optimality", [seed, specs] {
    Rng rng(seed, 3);
    for (const NormSpec &spec : specs) {
      const Matrix z = rng.gaussian_matrix(5, 7);
      const double t = 0.8;
      const Matrix x = prox(spec, z, t);
      const Matrix w = (z - x) / t;
      if (dual_norm_value(spec, w) > 1 + 1e-8)
        return "prox residual outside the dual ball for " + spec.to_string();
      if (auto e = expect_close(frobenius_inner(w, x), norm_value(spec, x), 1e-8,
                                "prox residual pairing for " + spec.to_string());
          !e.empty())
        return e;
    }
    return std::string();
  }});

  checks.push_back({"k-support threshold", [] {
    Vector s(4);
    s << 3.0, 1.0, 0.5, 0.0;
    const KSupportDecomposition dec = find_kr_threshold(s, 2);
    if (dec.r != 0)
      return std::string("expected r = 0 for (3, 1, 0.5, 0), k = 2");
    return expect_close(vector_ksupport_norm(s, 2), std::sqrt(9.0 + 1.5 * 1.5), 1e-12,
                        "k-support norm of (3, 1, 0.5, 0)");
  }});

  checks.push_back({"cone sampler membership", [seed, specs] {
    InstanceConfig in;
    in.rows = 8;
    in.cols = 8;
    in.rank = 2;
    in.target_spikiness = 8.0;
    const Matrix theta = generate_instance(in, seed);
    for (const NormSpec &spec : specs) {
      const ConeSampler cone(spec, theta);
      for (std::uint64_t i = 0; i < 20; ++i) {
        Rng rng(seed, 100 + i);
        const auto e = cone.draw(rng);
        if (!e)
          continue;
        if (std::abs(e->direction.norm() - 1.0) > 1e-9)
          return "non-unit direction for " + spec.to_string();
        if (norm_value(spec, theta + e->witness * e->direction) >
            norm_value(spec, theta) * (1 + 1e-9))
          return "witness check fails for " + spec.to_string();
      }
    }
    return std::string();
  }});

  checks.push_back({"width sandwich", [seed, threads] {
    InstanceConfig in;
    in.rows = 8;
    in.cols = 8;
    in.rank = 1;
    in.target_spikiness = 8.0;
    const Matrix theta = generate_instance(in, seed);
    McOptions mc;
    mc.samples = 40;
    mc.seed = seed;
    mc.threads = threads;
    const ConeSampler cone(NormSpec::nuclear(), theta);
    const double lo = gaussian_width_lower(cone, mc).value;
    const double hi = gaussian_width_upper_polar(NormSpec::nuclear(), theta, mc).value;
    if (lo > hi * (1 + 1e-9))
      return "lower estimate " + format_double(lo) + " above polar estimate " + format_double(hi);
    return std::string();
  }});

  checks.push_back({"noiseless recovery", [seed] {
    InstanceConfig in;
    in.rows = 6;
    in.cols = 6;
    in.rank = 1;
    in.target_spikiness = 6.0;
    const Matrix theta = generate_instance(in, seed);
    const ObservationSet omega = full_observation(6, 6);
    const Vector y = project_omega(theta, omega);
    EstimatorConfig est;
    est.lambda = 1e-8;
    est.alpha_star = 6.0;
    const SolveResult r = solve_constrained_norm(y, omega, NormSpec::nuclear(), est);
    if ((r.theta - theta).norm() > 1e-3)
      return "recovery error " + format_double((r.theta - theta).norm());
    return std::string();
  }});

  checks.push_back({"full-observation rsc", [seed] {
    const ObservationSet omega = full_observation(5, 5);
    const GeometryEstimate k = rsc_verify(omega, FullSphere(5, 5), 1e9, 20, seed);
    return expect_close(k.value, 1.0, 1e-12, "kappa under full observation");
  }});

  checks.push_back({"glm gradient", [seed] {
    const GlmLoss loss(GlmLossKind::Poisson);
    const ObservationSet omega = sample_omega(4, 5, 15, seed);
    Rng rng(seed, 9);
    const Matrix theta = 0.3 * rng.gaussian_matrix(4, 5);
    Vector y(15);
    for (int k = 0; k < 15; ++k)
      y[k] = static_cast<double>(rng.uniform_int(4));
    const Matrix g = glm_loss_gradient(loss, theta, y, omega);
    const Matrix dir = rng.gaussian_matrix(4, 5);
    const double h = 1e-6;
    const double fd = (glm_loss_value(loss, theta + h * dir, y, omega) -
                       glm_loss_value(loss, theta - h * dir, y, omega)) /
                      (2 * h);
    return expect_close(frobenius_inner(g, dir), fd, 1e-6, "directional derivative");
  }});

  bool ok = true;
  for (const Check &c : checks) {
    std::string failure;
    try {
      failure = c.run();
    } catch (const std::exception &e) {
      failure = std::string("exception: ") + e.what();
    }
    if (failure.empty()) {
      os << "PASS " << c.name << '\n';
    } else {
      os << "FAIL " << c.name << " (" << failure << ")\n";
      ok = false;
    }
  }
  return ok;
}

} // namespace smc
