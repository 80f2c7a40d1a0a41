#include "smc/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "smc/random.hpp"

namespace smc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Matrix clip(const Matrix &x, double bound) {
  return x.cwiseMax(-bound).cwiseMin(bound);
}

double box_violation(const Matrix &x, double bound) {
  return x.size() == 0 ? 0.0 : std::max(0.0, x.cwiseAbs().maxCoeff() - bound);
}

void check_inputs(const Vector &y, const ObservationSet &omega, const NormSpec &spec,
                  const EstimatorConfig &cfg, EstimatorKind expected) {
  cfg.validate();
  if (cfg.estimator != expected)
    throw std::invalid_argument("estimator config is for " + to_string(cfg.estimator) +
                                ", expected " + to_string(expected));
  if (static_cast<std::size_t>(y.size()) != omega.size())
    throw std::invalid_argument("observation vector length " + std::to_string(y.size()) +
                                " does not match |Omega| = " + std::to_string(omega.size()));
  if (!y.allFinite())
    throw std::invalid_argument("observations must be finite");
  spec.check_dims(omega.rows(), omega.cols());
}

// Smooth part of a composite objective: value and gradient at a point.
struct SmoothEval {
  double value;
  Matrix grad;
};
using SmoothFn = std::function<SmoothEval(const Matrix &)>;

struct InnerResult {
  Matrix x;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// Accelerated proximal gradient for f(X) + mu R(X) over the box, with
// gradient-based adaptive restart. Stops on the gradient-mapping norm.
InnerResult fista(const SmoothFn &f, const NormSpec &spec, double mu, double bound,
                  const Matrix &start, double lipschitz, bool backtrack, int max_iter,
                  double tolerance) {
  InnerResult out;
  double L = lipschitz;
  Matrix x = clip(start, bound);
  Matrix y = x;
  double t = 1.0;
  for (int it = 1; it <= max_iter; ++it) {
    SmoothEval fy = f(y);
    Matrix x_new;
    while (true) {
      x_new = prox_with_box(spec, y - fy.grad / L, mu / L, bound);
      if (!backtrack)
        break;
      const Matrix step = x_new - y;
      const double model = fy.value + frobenius_inner(fy.grad, step) + 0.5 * L * step.squaredNorm();
      if (f(x_new).value <= model + 1e-12 * std::max(1.0, std::abs(model)))
        break;
      L *= 2.0;
    }
    out.iterations = it;
    out.residual = L * (x_new - y).norm();
    if (out.residual <= tolerance) {
      out.x = std::move(x_new);
      out.converged = true;
      return out;
    }
    if (frobenius_inner(y - x_new, x_new - x) > 0.0) {
      t = 1.0;
      y = x_new;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = x_new + ((t - 1.0) / t_next) * (x_new - x);
      t = t_next;
    }
    x = std::move(x_new);
  }
  out.x = std::move(x);
  return out;
}

// Shared driver for the constrained programs: a penalized solve for each mu
// and an Illinois search on log(mu) for the point where the constraint value
// meets lambda (within the constraint tolerance, from above).
struct PathProblem {
  SmoothFn smooth;
  std::function<double(const Matrix &)> constraint;
  double lipschitz;
  bool backtrack;
  double mu_max;
};

struct PathPoint {
  double mu = 0.0;
  InnerResult inner;
  double value = 0.0;
};

SolveResult run_path(const PathProblem &problem, const NormSpec &spec,
                     const EstimatorConfig &cfg, int rows, int cols,
                     double (*certificate)(const PathPoint &, double lambda)) {
  SolveResult res;
  const double bound = cfg.box_bound(rows, cols);
  const double lambda = cfg.lambda;
  const double ctol = cfg.constraint_tolerance;
  const double inner_tol = 0.1 * std::min(cfg.objective_tolerance, ctol);
  int total_iterations = 0;
  Matrix warm = Matrix::Zero(rows, cols);

  auto solve_at = [&](double mu) {
    PathPoint p;
    p.mu = mu;
    p.inner = fista(problem.smooth, spec, mu, bound, warm, problem.lipschitz, problem.backtrack,
                    cfg.max_iterations, inner_tol);
    total_iterations += p.inner.iterations;
    p.value = problem.constraint(p.inner.x);
    warm = p.inner.x;
    return p;
  };

  // h(mu) = value(mu) - lambda - ctol/10 is nondecreasing in mu.
  const double target = lambda + 0.1 * ctol;
  double log_hi = std::log(problem.mu_max);
  double h_hi = problem.constraint(Matrix::Zero(rows, cols)) - target;
  PathPoint lo = solve_at(problem.mu_max * 1e-10);
  double log_lo = std::log(lo.mu);
  double h_lo = lo.value - target;
  bool ok = h_lo <= 0.5 * ctol;
  PathPoint best = lo;
  if (!ok) {
    res.message = "infeasible or unresolved: constraint value " + std::to_string(lo.value) +
                  " exceeds lambda " + std::to_string(lambda) + " at the smallest penalty";
  } else if (h_lo < 0.0) {
    int side = 0;
    for (int it = 0; it < 80; ++it) {
      double log_mid = log_lo - h_lo * (log_hi - log_lo) / (h_hi - h_lo);
      if (!(log_mid > log_lo && log_mid < log_hi))
        log_mid = 0.5 * (log_lo + log_hi);
      PathPoint mid = solve_at(std::exp(log_mid));
      const double h_mid = mid.value - target;
      if (h_mid <= 0.5 * ctol && mid.mu > best.mu)
        best = mid;
      const bool certified = certificate(mid, lambda) <=
                             cfg.objective_tolerance * std::max(1.0, norm_value(spec, mid.inner.x));
      if ((std::abs(h_mid) <= 0.05 * ctol && certified) || log_hi - log_lo < 1e-13)
        break;
      if (h_mid < 0.0) {
        log_lo = log_mid;
        h_lo = h_mid;
        if (side == -1)
          h_hi *= 0.5;
        side = -1;
      } else {
        log_hi = log_mid;
        h_hi = h_mid;
        if (side == 1)
          h_lo *= 0.5;
        side = 1;
      }
    }
  }
  res.theta = best.inner.x;
  res.objective = norm_value(spec, res.theta);
  res.constraint_value = best.value;
  res.constraint_residual =
      std::max(std::max(0.0, best.value - lambda), box_violation(res.theta, bound));
  res.iterations = total_iterations;
  res.certificate = certificate(best, lambda);
  res.converged = ok && best.inner.converged && res.constraint_residual <= ctol &&
                  res.certificate <= cfg.objective_tolerance * std::max(1.0, res.objective);
  if (ok && !res.converged)
    res.message = best.inner.converged ? "optimality certificate above tolerance"
                                       : "inner solver hit the iteration limit";
  return res;
}

SolveResult zero_result(int rows, int cols, double constraint_value, const char *message) {
  SolveResult res;
  res.theta = Matrix::Zero(rows, cols);
  res.constraint_value = constraint_value;
  res.converged = true;
  res.message = message;
  return res;
}

double counts_lipschitz(const ObservationSet &omega) {
  const Matrix counts = omega.counts();
  return power_iteration([&](const Matrix &x) { return Matrix(counts.cwiseProduct(x)); },
                         omega.rows(), omega.cols());
}

} // namespace

EstimatorKind parse_estimator_kind(std::string_view name) {
  if (name == "constrained-norm" || name == "cn")
    return EstimatorKind::ConstrainedNorm;
  if (name == "dantzig" || name == "ds")
    return EstimatorKind::Dantzig;
  if (name == "glm-regularized" || name == "glm")
    return EstimatorKind::GlmRegularized;
  throw std::invalid_argument("unknown estimator '" + std::string(name) + "'");
}

std::string to_string(EstimatorKind kind) {
  switch (kind) {
  case EstimatorKind::ConstrainedNorm:
    return "constrained-norm";
  case EstimatorKind::Dantzig:
    return "dantzig";
  case EstimatorKind::GlmRegularized:
    return "glm-regularized";
  }
  return "unknown";
}

GlmLoss GlmLoss::parse(std::string_view name) {
  if (name == "gaussian")
    return GlmLoss(GlmLossKind::Gaussian);
  if (name == "bernoulli-logistic" || name == "bernoulli")
    return GlmLoss(GlmLossKind::BernoulliLogistic);
  if (name == "poisson")
    return GlmLoss(GlmLossKind::Poisson);
  throw std::invalid_argument("unknown GLM loss '" + std::string(name) + "'");
}

std::string GlmLoss::to_string() const {
  switch (kind_) {
  case GlmLossKind::Gaussian:
    return "gaussian";
  case GlmLossKind::BernoulliLogistic:
    return "bernoulli-logistic";
  case GlmLossKind::Poisson:
    return "poisson";
  }
  return "unknown";
}

double GlmLoss::a(double u) const {
  switch (kind_) {
  case GlmLossKind::Gaussian:
    return 0.5 * u * u;
  case GlmLossKind::BernoulliLogistic:
    return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
  case GlmLossKind::Poisson:
    return std::exp(u);
  }
  return 0.0;
}

double GlmLoss::a1(double u) const {
  switch (kind_) {
  case GlmLossKind::Gaussian:
    return u;
  case GlmLossKind::BernoulliLogistic:
    return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
  case GlmLossKind::Poisson:
    return std::exp(u);
  }
  return 0.0;
}

double GlmLoss::a2(double u) const {
  switch (kind_) {
  case GlmLossKind::Gaussian:
    return 1.0;
  case GlmLossKind::BernoulliLogistic: {
    const double p = a1(u);
    return p * (1.0 - p);
  }
  case GlmLossKind::Poisson:
    return std::exp(u);
  }
  return 0.0;
}

double GlmLoss::max_curvature(double bound) const {
  switch (kind_) {
  case GlmLossKind::Gaussian:
    return 1.0;
  case GlmLossKind::BernoulliLogistic:
    return 0.25;
  case GlmLossKind::Poisson:
    return std::exp(bound);
  }
  return 1.0;
}

void GlmLoss::check_observation(double y) const {
  if (!std::isfinite(y))
    throw std::invalid_argument("GLM observation must be finite");
  if (kind_ == GlmLossKind::BernoulliLogistic && y != 0.0 && y != 1.0)
    throw std::invalid_argument("bernoulli-logistic observations must be 0 or 1");
  if (kind_ == GlmLossKind::Poisson && (y < 0.0 || y != std::floor(y)))
    throw std::invalid_argument("poisson observations must be nonnegative integers");
}

void EstimatorConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("lambda must be a finite nonnegative number");
  if (estimator == EstimatorKind::Dantzig && !(lambda > 0.0))
    throw std::invalid_argument("dantzig selector needs lambda_ds > 0");
  if (!(alpha_star >= 1.0))
    throw std::invalid_argument("spikiness cap alpha* must be at least 1");
  if (max_iterations < 1)
    throw std::invalid_argument("max_iterations must be positive");
  if (!(objective_tolerance > 0.0) || !(constraint_tolerance > 0.0))
    throw std::invalid_argument("solver tolerances must be positive");
}

double EstimatorConfig::box_bound(int rows, int cols) const {
  return alpha_star / std::sqrt(static_cast<double>(rows) * cols);
}

std::string SolveResult::to_json(const std::string &theta_path) const {
  nlohmann::ordered_json j;
  j["objective"] = objective;
  j["constraint_value"] = constraint_value;
  j["constraint_residual"] = constraint_residual;
  j["iterations"] = iterations;
  j["converged"] = converged;
  j["certificate"] = certificate;
  j["wall_time"] = wall_time;
  j["rows"] = theta.rows();
  j["cols"] = theta.cols();
  if (!theta_path.empty())
    j["theta_path"] = theta_path;
  if (!message.empty())
    j["message"] = message;
  return j.dump(2);
}

double power_iteration(const std::function<Matrix(const Matrix &)> &op, int rows, int cols,
                       int iterations, double tolerance) {
  Matrix x = Matrix::Ones(rows, cols);
  x /= x.norm();
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Matrix ax = op(x);
    const double next = frobenius_inner(x, ax);
    const double n = ax.norm();
    if (n == 0.0)
      return 0.0;
    x = ax / n;
    if (std::abs(next - estimate) <= tolerance * std::max(1.0, std::abs(next))) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  return estimate;
}

Matrix prox_with_box(const NormSpec &spec, const Matrix &z, double t, double bound,
                     int max_inner, double tolerance) {
  if (t == 0.0)
    return clip(z, bound);
  Matrix first = prox(spec, z, t);
  if (box_violation(first, bound) == 0.0)
    return first;
  Matrix x = clip(first, bound);
  Matrix p = z - first;
  Matrix q = first - x;
  for (int it = 1; it < max_inner; ++it) {
    const Matrix y = prox(spec, x + p, t);
    p += x - y;
    Matrix x_new = clip(y + q, bound);
    q += y - x_new;
    const double change = (x_new - x).norm();
    x = std::move(x_new);
    if (change < tolerance)
      break;
  }
  return x;
}

double glm_loss_value(const GlmLoss &loss, const Matrix &theta, const Vector &y,
                      const ObservationSet &omega) {
  const Vector u = project_omega(theta, omega);
  double total = 0.0;
  for (Eigen::Index k = 0; k < u.size(); ++k)
    total += loss.a(u(k)) - y(k) * u(k);
  return static_cast<double>(omega.rows()) * omega.cols() / static_cast<double>(omega.size()) *
         total;
}

Matrix glm_loss_gradient(const GlmLoss &loss, const Matrix &theta, const Vector &y,
                         const ObservationSet &omega) {
  const Vector u = project_omega(theta, omega);
  Vector r(u.size());
  for (Eigen::Index k = 0; k < u.size(); ++k)
    r(k) = loss.a1(u(k)) - y(k);
  return static_cast<double>(omega.rows()) * omega.cols() / static_cast<double>(omega.size()) *
         adjoint_omega(r, omega);
}

SolveResult solve_constrained_norm(const Vector &y, const ObservationSet &omega,
                                   const NormSpec &spec, const EstimatorConfig &cfg) {
  const auto start = Clock::now();
  check_inputs(y, omega, spec, cfg, EstimatorKind::ConstrainedNorm);
  const int rows = omega.rows(), cols = omega.cols();
  SolveResult res;
  if (y.norm() <= cfg.lambda) {
    res = zero_result(rows, cols, y.norm(), "zero is feasible");
  } else {
    PathProblem problem;
    problem.smooth = [&](const Matrix &theta) {
      const Vector r = project_omega(theta, omega) - y;
      return SmoothEval{0.5 * r.squaredNorm(), adjoint_omega(r, omega)};
    };
    problem.constraint = [&](const Matrix &theta) {
      return (project_omega(theta, omega) - y).norm();
    };
    problem.lipschitz = counts_lipschitz(omega);
    problem.backtrack = true;
    problem.mu_max = dual_norm_value(spec, adjoint_omega(y, omega));
    // Lagrangian bound: R(theta_mu) - (lambda^2 - ||r||^2) / (2 mu) <= optimum.
    res = run_path(problem, spec, cfg, rows, cols, [](const PathPoint &p, double lambda) {
      return std::abs(lambda * lambda - p.value * p.value) / (2.0 * p.mu);
    });
  }
  res.wall_time = seconds_since(start);
  return res;
}

SolveResult solve_dantzig(const Vector &y, const ObservationSet &omega, const NormSpec &spec,
                          const EstimatorConfig &cfg) {
  const auto start = Clock::now();
  check_inputs(y, omega, spec, cfg, EstimatorKind::Dantzig);
  const int rows = omega.rows(), cols = omega.cols();
  const double scale = std::sqrt(static_cast<double>(rows) * cols) / static_cast<double>(omega.size());
  // Constraint R*(K theta - b) <= lambda with K = scale * diag(counts).
  const Matrix k_diag = scale * omega.counts();
  const Matrix b = scale * adjoint_omega(y, omega);
  const double lambda = cfg.lambda;
  const double bound = cfg.box_bound(rows, cols);
  const double ctol = cfg.constraint_tolerance, otol = cfg.objective_tolerance;
  auto constraint = [&](const Matrix &theta) {
    return dual_norm_value(spec, Matrix(k_diag.cwiseProduct(theta) - b));
  };
  SolveResult res;
  const double at_zero = dual_norm_value(spec, b);
  if (at_zero <= lambda) {
    res = zero_result(rows, cols, at_zero, "zero is feasible");
    res.wall_time = seconds_since(start);
    return res;
  }

  // Augmented Lagrangian on the split Z = K theta - b, Z in lambda B*:
  //   theta <- argmin R + box + rho/2 dist^2(K theta - b + Y/rho, lambda B*)
  //   Y     <- rho prox_{lambda R}(K theta - b + Y/rho)
  const double kmax = k_diag.maxCoeff();
  double rho = 1.0 / (lambda * kmax);
  Matrix mult = Matrix::Zero(rows, cols);
  Matrix theta = Matrix::Zero(rows, cols);
  double last_violation = std::numeric_limits<double>::infinity();
  int total_iterations = 0;
  bool inner_ok = false;
  double gap = std::numeric_limits<double>::infinity();
  double violation = at_zero - lambda;
  for (int outer = 0; outer < 200 && total_iterations < cfg.max_iterations; ++outer) {
    const Matrix shift = mult / rho;
    SmoothFn smooth = [&](const Matrix &t) {
      const Matrix outside = prox(spec, Matrix(k_diag.cwiseProduct(t) - b + shift), lambda);
      return SmoothEval{0.5 * outside.squaredNorm(), Matrix(k_diag.cwiseProduct(outside))};
    };
    // Stationarity of the unscaled subproblem within 0.1 min(otol, ctol).
    const double inner_tol = 0.1 * std::min(otol, ctol) / rho;
    InnerResult inner = fista(smooth, spec, 1.0 / rho, bound, theta, kmax * kmax, false,
                              cfg.max_iterations - total_iterations, inner_tol);
    total_iterations += inner.iterations;
    theta = inner.x;
    inner_ok = inner.converged;
    mult = rho * prox(spec, Matrix(k_diag.cwiseProduct(theta) - b + shift), lambda);
    violation = constraint(theta) - lambda;

    // Lagrangian dual bound: with Q = K Y scaled so R*(Q) <= 1,
    //   optimum >= -<Y, b> - lambda R(Y)   (box inactive).
    const double box_gap = bound - theta.cwiseAbs().maxCoeff();
    const double objective = norm_value(spec, theta);
    if (box_gap > 1e-9 * bound) {
      const double q = dual_norm_value(spec, Matrix(k_diag.cwiseProduct(mult)));
      const Matrix yd = mult / std::max(1.0, q);
      gap = objective - (-frobenius_inner(yd, b) - lambda * norm_value(spec, yd));
    } else {
      // Active box: report the subproblem stationarity residual instead.
      gap = inner.residual * rho;
    }
    if (inner_ok && violation <= ctol && std::abs(gap) <= otol * std::max(1.0, objective))
      break;
    if (violation > 0.25 * last_violation)
      rho *= 5.0;
    last_violation = std::max(violation, 0.0);
  }
  res.theta = theta;
  res.objective = norm_value(spec, theta);
  res.constraint_value = violation + lambda;
  res.constraint_residual = std::max(std::max(0.0, violation), box_violation(theta, bound));
  res.iterations = total_iterations;
  res.certificate = std::abs(gap);
  res.converged = inner_ok && res.constraint_residual <= ctol &&
                  std::abs(gap) <= otol * std::max(1.0, res.objective);
  if (!res.converged)
    res.message = !inner_ok ? "inner solver hit the iteration limit"
                : res.constraint_residual > ctol ? "constraint residual above tolerance"
                                                 : "duality gap above tolerance";
  res.wall_time = seconds_since(start);
  return res;
}

SolveResult solve_glm(const Vector &y, const ObservationSet &omega, const NormSpec &spec,
                      const EstimatorConfig &cfg) {
  const auto start = Clock::now();
  check_inputs(y, omega, spec, cfg, EstimatorKind::GlmRegularized);
  for (Eigen::Index k = 0; k < y.size(); ++k)
    cfg.loss.check_observation(y(k));
  if (omega.empty())
    throw std::invalid_argument("GLM estimator needs at least one observation");
  const int rows = omega.rows(), cols = omega.cols();
  const double bound = cfg.box_bound(rows, cols);
  SmoothFn smooth = [&](const Matrix &theta) {
    return SmoothEval{glm_loss_value(cfg.loss, theta, y, omega),
                      glm_loss_gradient(cfg.loss, theta, y, omega)};
  };
  const double weight = static_cast<double>(rows) * cols / static_cast<double>(omega.size());
  const double lipschitz = weight * counts_lipschitz(omega) * cfg.loss.max_curvature(bound);
  InnerResult inner = fista(smooth, spec, cfg.lambda, bound, Matrix::Zero(rows, cols), lipschitz,
                            true, cfg.max_iterations, cfg.objective_tolerance);
  SolveResult res;
  res.theta = std::move(inner.x);
  res.objective = glm_loss_value(cfg.loss, res.theta, y, omega) +
                  (cfg.lambda > 0.0 ? cfg.lambda * norm_value(spec, res.theta) : 0.0);
  res.constraint_residual = box_violation(res.theta, bound);
  res.iterations = inner.iterations;
  res.certificate = inner.residual;
  res.converged = inner.converged && res.constraint_residual <= cfg.constraint_tolerance;
  if (!inner.converged)
    res.message = "iteration limit reached";
  res.wall_time = seconds_since(start);
  return res;
}

SolveResult solve(const Vector &y, const ObservationSet &omega, const NormSpec &spec,
                  const EstimatorConfig &cfg) {
  switch (cfg.estimator) {
  case EstimatorKind::ConstrainedNorm:
    return solve_constrained_norm(y, omega, spec, cfg);
  case EstimatorKind::Dantzig:
    return solve_dantzig(y, omega, spec, cfg);
  case EstimatorKind::GlmRegularized:
    return solve_glm(y, omega, spec, cfg);
  }
  throw std::logic_error("unknown estimator kind");
}

double auto_lambda(EstimatorKind kind, double nu, const ObservationSet &omega,
                   const NormSpec &spec, int draws, std::uint64_t seed, NoiseKind noise) {
  if (!(nu >= 0.0))
    throw std::invalid_argument("noise level must be nonnegative");
  const double m = static_cast<double>(omega.size());
  switch (kind) {
  case EstimatorKind::ConstrainedNorm:
    return 2.0 * nu * std::sqrt(m);
  case EstimatorKind::Dantzig: {
    if (nu == 0.0 || omega.empty())
      return 0.0;
    if (draws < 1)
      throw std::invalid_argument("auto_lambda needs at least one noise draw");
    const double scale = std::sqrt(static_cast<double>(omega.rows()) * omega.cols()) / m;
    std::vector<double> values(static_cast<std::size_t>(draws));
    for (int i = 0; i < draws; ++i) {
      const Vector eta = draw_noise(noise, omega.size(), seed, 0x1a3b0000u + i);
      values[i] = 2.0 * nu * scale * dual_norm_value(spec, adjoint_omega(eta, omega));
    }
    std::sort(values.begin(), values.end());
    const double pos = 0.95 * (draws - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - lo) * (values[hi] - values[lo]);
  }
  case EstimatorKind::GlmRegularized:
    throw std::invalid_argument("auto_lambda has no rule for the GLM estimator");
  }
  throw std::logic_error("unknown estimator kind");
}

} // namespace smc
