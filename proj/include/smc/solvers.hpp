#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include "smc/norms.hpp"
#include "smc/observation.hpp"

namespace smc {

enum class EstimatorKind { ConstrainedNorm, Dantzig, GlmRegularized };

EstimatorKind parse_estimator_kind(std::string_view name);
std::string to_string(EstimatorKind kind);

enum class GlmLossKind { Gaussian, BernoulliLogistic, Poisson };

/// Exponential-family log-partition A with its first two derivatives.
class GlmLoss {
public:
  GlmLoss() = default;
  explicit GlmLoss(GlmLossKind kind) : kind_(kind) {}
  static GlmLoss parse(std::string_view name);

  GlmLossKind kind() const { return kind_; }
  std::string to_string() const;

  double a(double u) const;
  double a1(double u) const;
  double a2(double u) const;
  /// sup of A'' over [-bound, bound].
  double max_curvature(double bound) const;
  /// Throws std::invalid_argument when y is outside the family's support.
  void check_observation(double y) const;

private:
  GlmLossKind kind_ = GlmLossKind::Gaussian;
};

struct EstimatorConfig {
  EstimatorKind estimator = EstimatorKind::ConstrainedNorm;
  /// lambda_cn, lambda_ds or lambda_re depending on `estimator`.
  double lambda = 0.0;
  GlmLoss loss;
  double alpha_star = 1e6;
  int max_iterations = 20000;
  double objective_tolerance = 1e-6;
  double constraint_tolerance = 1e-6;

  void validate() const;
  /// Box bound alpha* / sqrt(d1 d2).
  double box_bound(int rows, int cols) const;
};

struct SolveResult {
  Matrix theta;
  double objective = 0.0;
  /// Value of the constrained quantity (||P(theta) - y|| or the scaled dual
  /// residual); 0 for the GLM estimator.
  double constraint_value = 0.0;
  /// Violation of the data constraint and the box, max(0, value - lambda).
  double constraint_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Duality gap (constrained programs) or fixed-point residual (GLM).
  double certificate = 0.0;
  double wall_time = 0.0;
  std::string message;

  /// Flat JSON record; `theta_path` is stored verbatim when nonempty.
  std::string to_json(const std::string &theta_path = "") const;
};

SolveResult solve_constrained_norm(const Vector &y, const ObservationSet &omega,
                                   const NormSpec &spec, const EstimatorConfig &cfg);
SolveResult solve_dantzig(const Vector &y, const ObservationSet &omega,
                          const NormSpec &spec, const EstimatorConfig &cfg);
SolveResult solve_glm(const Vector &y, const ObservationSet &omega,
                      const NormSpec &spec, const EstimatorConfig &cfg);
/// Dispatches on cfg.estimator.
SolveResult solve(const Vector &y, const ObservationSet &omega, const NormSpec &spec,
                  const EstimatorConfig &cfg);

/// 2 nu sqrt(m) for the constrained estimator; for the Dantzig selector the
/// 95th percentile of 2 nu (sqrt(d1 d2)/m) R*(P*(eta)) over `draws` noise draws.
double auto_lambda(EstimatorKind kind, double nu, const ObservationSet &omega,
                   const NormSpec &spec, int draws, std::uint64_t seed,
                   NoiseKind noise = NoiseKind::Gaussian);

/// (d1 d2 / m) sum_k A(theta_k) - y_k theta_k and its gradient.
double glm_loss_value(const GlmLoss &loss, const Matrix &theta, const Vector &y,
                      const ObservationSet &omega);
Matrix glm_loss_gradient(const GlmLoss &loss, const Matrix &theta, const Vector &y,
                         const ObservationSet &omega);

/// Largest eigenvalue of a symmetric positive semidefinite operator by power
/// iteration from a deterministic start.
double power_iteration(const std::function<Matrix(const Matrix &)> &op, int rows,
                       int cols, int iterations = 100, double tolerance = 1e-10);

/// argmin_X 1/2 ||X - Z||^2 + t R(X) subject to ||X||_inf <= bound, by a
/// Dykstra-type alternation between the two proximal maps.
Matrix prox_with_box(const NormSpec &spec, const Matrix &z, double t, double bound,
                     int max_inner = 50, double tolerance = 1e-10);

} // namespace smc
