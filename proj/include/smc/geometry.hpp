#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "smc/norms.hpp"
#include "smc/observation.hpp"
#include "smc/random.hpp"

namespace smc {

enum class EstimateDirection { LowerBound, UpperBound, Unbiased };
std::string to_string(EstimateDirection direction);

/// Monte Carlo estimate. The standard error uses batch means over 10 equal
/// batches (plain std/sqrt(n) below 10 samples).
struct GeometryEstimate {
  std::string name;
  double value = 0.0;
  double standard_error = 0.0;
  int samples = 0;
  EstimateDirection direction = EstimateDirection::Unbiased;
  std::uint64_t seed = 0;
  double wall_time = 0.0;
  /// Per-draw values in draw order.
  std::vector<double> draws;

  static std::string csv_header();
  std::string csv_row(bool include_wall_time = true) const;
};

/// Mean and batch-means standard error of a sample.
std::pair<double, double> mean_and_stderr(const std::vector<double> &values, int batches = 10);

/// A set of unit-Frobenius directions S with the operations the estimators need.
class DirectionSet {
public:
  virtual ~DirectionSet() = default;
  virtual int rows() const = 0;
  virtual int cols() const = 0;
  /// A random member, or nothing when the draw budget is exhausted.
  virtual std::optional<Matrix> sample(Rng &rng) const = 0;
  /// A member close to the ray through v (exact nearest point when available).
  virtual std::optional<Matrix> project(const Matrix &v) const = 0;
  virtual bool contains(const Matrix &x) const = 0;
};

class FullSphere : public DirectionSet {
public:
  FullSphere(int rows, int cols) : rows_(rows), cols_(cols) {}
  int rows() const override { return rows_; }
  int cols() const override { return cols_; }
  std::optional<Matrix> sample(Rng &rng) const override;
  std::optional<Matrix> project(const Matrix &v) const override;
  bool contains(const Matrix &x) const override;

private:
  int rows_, cols_;
};

class SinglePoint : public DirectionSet {
public:
  /// The point is normalized to unit Frobenius norm.
  explicit SinglePoint(const Matrix &x);
  int rows() const override { return static_cast<int>(x_.rows()); }
  int cols() const override { return static_cast<int>(x_.cols()); }
  std::optional<Matrix> sample(Rng &) const override { return x_; }
  std::optional<Matrix> project(const Matrix &) const override { return x_; }
  bool contains(const Matrix &x) const override;

private:
  Matrix x_;
};

enum class SamplerMethod { BoundaryRay, Rejection };
SamplerMethod parse_sampler_method(const std::string &name);

struct ConeSamplerOptions {
  SamplerMethod method = SamplerMethod::BoundaryRay;
  /// Proposal attempts per emitted direction.
  int budget = 64;
  /// Mix in sign matrices sign(a) sign(b)^T built from perturbed top singular
  /// pairs of -anchor; they have spikiness exactly 1.
  bool flat_proposals = false;
  /// Use the exact tangent-cone projection in project().
  bool exact_projection = true;
};

/// Unit directions of the descent cone T_R at an anchor:
///   E_R = cone{D : R(anchor + D) <= R(anchor)} intersected with the sphere.
/// Every emitted direction X comes with a witness step t > 0 such that
/// R(anchor + t X) <= R(anchor) (1 + 1e-9).
class ConeSampler : public DirectionSet {
public:
  ConeSampler(NormSpec spec, Matrix anchor, ConeSamplerOptions options = {});

  struct Emission {
    Matrix direction;
    double witness = 0.0;
  };

  int rows() const override { return static_cast<int>(anchor_.rows()); }
  int cols() const override { return static_cast<int>(anchor_.cols()); }
  std::optional<Matrix> sample(Rng &rng) const override;
  std::optional<Matrix> project(const Matrix &v) const override;
  bool contains(const Matrix &x) const override;

  std::optional<Emission> draw(Rng &rng) const;
  /// Normalizes v and searches for a witness step; nothing if v is not a
  /// descent direction at the tolerance.
  std::optional<Emission> certify(const Matrix &v, double hint = 0.0) const;
  /// Largest t in [1e-6 ||anchor||_F, 2 R(anchor)] with
  /// R(anchor + t x) <= R(anchor)(1 + 1e-9), 0 when no such step exists.
  double boundary_step(const Matrix &unit) const;
  /// anchor + eps ||anchor|| d/||d|| pulled radially onto the norm sphere,
  /// minus the anchor.
  Matrix retract(const Matrix &d, double eps) const;

  /// R'(anchor; d) = max over the subdifferential of <W, d>; d lies in the
  /// closed descent cone iff this is <= 0.
  double directional_derivative(const Matrix &d) const;

  /// Euclidean projections onto the tangent cone and its polar (the normal
  /// cone generated by the subdifferential).
  Matrix tangent_projection(const Matrix &v) const;
  Matrix normal_projection(const Matrix &v) const;
  /// dist(v, N) with the normal-cone scale fixed to ||P_{T-perp} v||_op and
  /// the free block matched to the singular values of P_{T-perp} v.
  double closed_choice_distance(const Matrix &v) const;

  const NormSpec &spec() const { return spec_; }
  const Matrix &anchor() const { return anchor_; }
  const SubdifferentialStructure &structure() const { return structure_; }
  double anchor_norm() const { return anchor_norm_; }
  const ConeSamplerOptions &options() const { return options_; }

private:
  std::optional<Emission> boundary_ray_draw(Rng &rng) const;
  std::optional<Emission> rejection_draw(Rng &rng) const;
  std::optional<Emission> flat_draw(Rng &rng) const;
  bool within(const Matrix &point) const;

  NormSpec spec_;
  Matrix anchor_;
  ConeSamplerOptions options_;
  SubdifferentialStructure structure_;
  double anchor_norm_;
};

struct SpikySlice {
  double beta;
  bool contains(const Matrix &x) const { return spikiness(x) < beta; }
};

struct McOptions {
  int samples = 200;
  int ascent = 25;
  /// Directions drawn once and shared by every outer draw.
  int pool = 32;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Member of S approximately maximizing <X, g>: best of the shared pool, the
/// projection of g, and projected ascent from the best candidate.
Matrix maximize_linear(const DirectionSet &set, const Matrix &g, const std::vector<Matrix> &pool,
                       int ascent);

std::vector<Matrix> draw_pool(const DirectionSet &set, int count, std::uint64_t seed);

/// E_G sup_{X in S} <X, G>, lower-bound estimate.
GeometryEstimate gaussian_width_lower(const DirectionSet &set, const McOptions &options);

/// E_G dist(G, cone(dR(anchor))), upper bound on the width of E_R.
GeometryEstimate gaussian_width_upper_polar(const NormSpec &spec, const Matrix &anchor,
                                            const McOptions &options);
/// Same with the fixed closed-form choice of scale and free block.
GeometryEstimate gaussian_width_upper_closed(const NormSpec &spec, const Matrix &anchor,
                                             const McOptions &options);

struct WidthBound {
  double value = 0.0;
  int r = 0;
  int rank = 0;
  /// The averaged block was empty and its ratio term was set to 0.
  bool empty_averaged_block = false;
};

/// s(2 dbar - s) + ((r+1)^2 ||sigma_I2||^2 / ||sigma_I1||_1^2 + |I1|)(2 dbar - s).
WidthBound ksupport_width_bound(const Vector &sigma, int k, int dbar);

struct OmegaLaw {
  int rows = 1;
  int cols = 1;
  std::int64_t m = 0;
  /// Every cell exactly once instead of m uniform draws.
  bool full = false;
};

/// E sup_{X in S - S} <X, P*(eta)> = 2 E sup_{X in S} <X, P*(eta)>, lower bound.
GeometryEstimate partial_complexity(const DirectionSet &set, const OmegaLaw &law,
                                    NoiseKind noise, const McOptions &options);

/// sup_{X in S} R(X)/||X||_F over pooled and ascended directions, lower bound.
GeometryEstimate compatibility_constant(const DirectionSet &set, const NormSpec &spec,
                                        const McOptions &options);

/// min of (d1 d2/m) ||P(X)||^2 over n sampled X in S with spikiness(X) < beta.
/// Throws std::runtime_error when no sampled direction passes the filter.
GeometryEstimate rsc_verify(const ObservationSet &omega, const DirectionSet &set, double beta,
                            int n, std::uint64_t seed);
/// Same, over a fixed list of directions.
GeometryEstimate rsc_verify(const ObservationSet &omega, const std::vector<Matrix> &directions,
                            double beta);

/// (m / (c0^2 wG^2 log d))^{1/4}.
double beta_threshold(double m, double wg2, double d, double c0);
/// 4 alpha*^2 sqrt(c0^2 wG^2 log d / m).
double spiky_error_floor(double alpha_star, double c0, double wg2, double d, double m);

} // namespace smc
