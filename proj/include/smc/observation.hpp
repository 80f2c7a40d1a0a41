#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace smc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Entry position, 0-based. External formats are 1-based.
struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell &, const Cell &) = default;
};

/// Ordered multiset of observed cells of a rows x cols matrix. Duplicates are
/// kept; position k in the list identifies observation k.
class ObservationSet {
public:
  ObservationSet(int rows, int cols, std::vector<Cell> cells = {});

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }
  const std::vector<Cell> &cells() const { return cells_; }
  const Cell &operator[](std::size_t k) const { return cells_[k]; }

  /// Number of times each cell was sampled, i.e. the diagonal of P*P.
  Matrix counts() const;

  /// First `m` observations, preserving order.
  ObservationSet prefix(std::size_t m) const;

private:
  int rows_;
  int cols_;
  std::vector<Cell> cells_;
};

enum class NoiseKind { Gaussian, Rademacher, UniformBounded };

NoiseKind parse_noise_kind(std::string_view name);
std::string to_string(NoiseKind kind);

/// Sub-Gaussian norm sup_{p>=1} p^{-1/2} (E|X|^p)^{1/p} of the unit-variance
/// family, evaluated from closed-form absolute moments.
double subgaussian_norm(NoiseKind kind);

/// Additive noise channel: y_k = Theta[i_k, j_k] + scale * eta_k with eta_k
/// i.i.d., mean 0, variance 1.
struct NoiseModel {
  NoiseKind kind = NoiseKind::Gaussian;
  double scale = 0.0;

  double subgaussian_bound() const { return subgaussian_norm(kind); }
};

void require_finite(const Matrix &x, std::string_view what);

/// m i.i.d. uniform cells, with replacement.
ObservationSet sample_omega(int rows, int cols, std::int64_t m, std::uint64_t seed);

/// Every cell exactly once, row-major order.
ObservationSet full_observation(int rows, int cols);

/// P_Omega(X)[k] = X[i_k, j_k].
Vector project_omega(const Matrix &x, const ObservationSet &omega);

/// P*_Omega(v) = sum_k v_k e_{i_k} e_{j_k}^T; duplicate cells accumulate.
Matrix adjoint_omega(const Vector &v, const ObservationSet &omega);

/// sqrt(d1 d2) ||X||_inf / ||X||_F; throws std::domain_error for X = 0.
double spikiness(const Matrix &x);

/// Draws m unit-variance noise values of the given kind.
Vector draw_noise(NoiseKind kind, std::size_t m, std::uint64_t seed,
                  std::uint64_t stream = 0);

Vector generate_observations(const Matrix &theta, const ObservationSet &omega,
                             const NoiseModel &noise, std::uint64_t seed);

inline double frobenius_inner(const Matrix &a, const Matrix &b) {
  return (a.array() * b.array()).sum();
}

} // namespace smc
