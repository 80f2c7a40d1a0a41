#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "smc/geometry.hpp"
#include "smc/matrix_io.hpp"
#include "smc/norms.hpp"
#include "smc/observation.hpp"
#include "smc/solvers.hpp"

namespace smc {

/// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Entry law of the matrices orthonormalized into the singular factors.
enum class FactorLaw { Gaussian, Rademacher };

struct InstanceConfig {
  int rows = 30;
  int cols = 30;
  int rank = 2;
  /// Singular values before normalization; empty means all ones.
  std::vector<double> spectrum;
  double target_spikiness = 3.0;
  FactorLaw factors = FactorLaw::Rademacher;
  NormSpec norm = NormSpec::nuclear();
};

struct SweepConfig {
  /// Sample sizes, or multiples of wG^2 log d when `m_in_width_units`.
  std::vector<double> m = {400};
  bool m_in_width_units = false;
  std::vector<double> nu = {0.05};
  std::vector<std::uint64_t> seeds = {1};
  double c0 = 2.0;
  /// Fixed lambda; auto_lambda when absent.
  std::optional<double> lambda;
};

struct GeometryBudget {
  int width_samples = 60;
  int kappa_directions = 200;
  int compat_samples = 10;
  int ascent = 25;
  int pool = 32;
  /// Restrict the RSC minimum to directions with spikiness below beta_c0.
  bool kappa_beta_filter = true;
  bool flat_proposals = true;
  bool compatibility = false;
};

struct ExperimentConfig {
  InstanceConfig instance;
  SweepConfig sweep;
  EstimatorConfig estimator;
  /// Use the instance spikiness target as alpha* (otherwise estimator.alpha_star).
  bool alpha_from_target = true;
  int lambda_draws = 200;
  NoiseKind noise = NoiseKind::Gaussian;
  GeometryBudget geometry;
  std::filesystem::path output_dir = "out";
  int threads = 1;
  bool save_matrices = false;
  bool require_convergence = true;

  /// Throws ConfigError.
  void validate() const;
  /// Relative paths are resolved against `base_dir`.
  static ExperimentConfig from_json(const nlohmann::json &j,
                                    const std::filesystem::path &base_dir = ".");
  /// Reads a JSON file; throws ConfigError for bad content and IoError when unreadable.
  static ExperimentConfig load(const std::filesystem::path &path);
  nlohmann::ordered_json to_json() const;
};

/// Unit-Frobenius Theta* = sum sigma_i u_i v_i^T with random orthonormal
/// factors (QR of a Gaussian or sign matrix), redrawn (at most 100 times) until spikiness <= target.
Matrix generate_instance(const InstanceConfig &cfg, std::uint64_t seed);

/// Missing values are NaN and come with a note.
struct TrialRecord {
  std::uint64_t seed = 0;
  double m_value = 0.0;
  std::int64_t m = 0;
  double nu = 0.0;
  int rows = 0, cols = 0, rank = 0;
  std::string norm;
  std::string estimator;
  double alpha_star = 0.0;
  double alpha_sp = 0.0;
  double lambda = 0.0;
  double error = 0.0;
  double wg_lower = 0.0;
  double psi = std::numeric_limits<double>::quiet_NaN();
  double beta = 0.0;
  double kappa = std::numeric_limits<double>::quiet_NaN();
  bool kappa_filtered = false;
  double noise_term = std::numeric_limits<double>::quiet_NaN();
  double floor_term = 0.0;
  double bound = std::numeric_limits<double>::quiet_NaN();
  bool bound_satisfied = false;
  bool converged = false;
  int iterations = 0;
  double solve_time = 0.0;
  double geometry_time = 0.0;
  std::string status = "ok";
  std::string notes;
};

struct InstanceGeometry {
  std::uint64_t seed = 0;
  Matrix theta;
  double alpha_sp = 0.0;
  GeometryEstimate width;
  std::optional<GeometryEstimate> width_upper;
  std::optional<GeometryEstimate> compatibility;
  std::vector<Matrix> kappa_directions;
};

struct SweepResult {
  std::vector<TrialRecord> trials;
  std::vector<InstanceGeometry> instances;
};

/// Instance draw plus its width, compatibility and RSC direction sample.
InstanceGeometry measure_instance(const ExperimentConfig &cfg, std::uint64_t seed);

SweepResult run_sweep(const ExperimentConfig &cfg);

struct SummaryRow {
  double m_value = 0.0;
  double nu = 0.0;
  int trials = 0;
  double mean_m = 0.0;
  double mean_error = 0.0;
  double stderr_error = 0.0;
  double mean_bound = 0.0;
  double bound_fraction = 0.0;
  double mean_kappa = 0.0;
  double converged_fraction = 0.0;
};

/// Per-(m, nu) aggregation, in first-appearance order.
std::vector<SummaryRow> report(const std::vector<TrialRecord> &records);

std::string trials_csv(const std::vector<TrialRecord> &records, EstimatorKind kind);
std::string summary_csv(const std::vector<SummaryRow> &rows);
std::string summary_text(const std::vector<SummaryRow> &rows);
std::string geometry_csv(const std::vector<InstanceGeometry> &instances);
std::string trials_json(const std::vector<TrialRecord> &records);

/// Writes trials, summary and geometry files (csv or json) into cfg.output_dir.
/// Throws IoError on failure.
void write_outputs(const ExperimentConfig &cfg, const SweepResult &result,
                   const std::string &format);

/// Property checks on small instances; one line per check. Returns true when all pass.
bool run_verify(std::ostream &os, std::uint64_t seed = 20240601, int threads = 1);

} // namespace smc
