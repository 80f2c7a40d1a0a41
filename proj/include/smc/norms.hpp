#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "smc/observation.hpp"

namespace smc {

enum class NormKind { Frobenius, Nuclear, SpectralKSupport };

/// A registered orthogonally invariant matrix norm.
///
/// String form (CLI and config files): "frobenius", "nuclear", "kspectral:k=3".
class NormSpec {
public:
  static NormSpec frobenius() { return NormSpec(NormKind::Frobenius, 0); }
  static NormSpec nuclear() { return NormSpec(NormKind::Nuclear, 0); }
  static NormSpec spectral_k_support(int k);
  static NormSpec parse(std::string_view text);

  NormKind kind() const { return kind_; }
  /// k for the spectral k-support norm, 0 otherwise.
  int k() const { return k_; }
  std::string to_string() const;

  bool has_prox() const { return true; }
  bool has_subdifferential() const { return true; }
  bool has_cone_sampler() const { return true; }

  /// Throws std::invalid_argument when k exceeds min(rows, cols).
  void check_dims(Eigen::Index rows, Eigen::Index cols) const;

  friend bool operator==(const NormSpec &, const NormSpec &) = default;

private:
  NormSpec(NormKind kind, int k) : kind_(kind), k_(k) {}
  NormKind kind_;
  int k_;
};

/// Full singular value decomposition: x = u.leftCols(p) diag(sigma) v.leftCols(p)^T
/// with p = min(rows, cols), sigma nonincreasing.
struct Svd {
  Matrix u;
  Vector sigma;
  Matrix v;
};

Svd svd_full(const Matrix &x);

/// Number of singular values above 1e-12 * sigma_1.
int numerical_rank(const Vector &sigma);

/// Threshold structure of the vector k-support norm at a sorted vector.
///
/// Positions are 0-based: the head block (I2) is [0, k - r - 1) and the
/// averaged block (I1) is [k - r - 1, rank). The tail [rank, p) is I0.
struct KSupportDecomposition {
  int r = 0;
  int k = 1;
  int rank = 0;
  int dim = 0;

  int head_size() const { return k - r - 1; }
  int averaged_begin() const { return k - r - 1; }
  int averaged_end() const { return rank; }
  int averaged_size() const { return rank > averaged_begin() ? rank - averaged_begin() : 0; }
};

/// Finds the unique r in {0..k-1} with
///   sigma_{k-r-1} > (1/(r+1)) sum_{i>=k-r} sigma_i >= sigma_{k-r}
/// (1-based, sigma_0 = +inf) by exhaustive scan.
/// Throws std::invalid_argument for unsorted or negative input or k out of range.
KSupportDecomposition find_kr_threshold(const Vector &sigma, int k);

// Vector k-support norm and its dual (l2 norm of the k largest magnitudes).
double vector_ksupport_norm(const Vector &z, int k);
double vector_ksupport_dual(const Vector &z, int k);

/// argmin_x 1/2 ||x - z||^2 + t ||x||_(k).
Vector vector_ksupport_prox(const Vector &z, int k, double t);

/// Euclidean projection onto {w : ||w||_(k)* <= radius}.
Vector project_topk_ball(const Vector &z, int k, double radius);

double norm_value(const NormSpec &spec, const Matrix &x);
double dual_norm_value(const NormSpec &spec, const Matrix &x);

/// argmin_X 1/2 ||X - Z||_F^2 + t R(X); t must be positive.
Matrix prox(const NormSpec &spec, const Matrix &z, double t);

/// Euclidean projection onto the dual-norm ball {R*(Y) <= radius}.
Matrix project_dual_ball(const NormSpec &spec, const Matrix &z, double radius);

struct SubgradientSample {
  Matrix w;
  NormKind kind;
};

/// A member of dR(X) built from the SVD of X. `h` (length min(rows, cols),
/// |h_i| <= 1) fills the free directions on the null singular positions;
/// entries at nonzero singular positions are ignored. Omitted means h = 0.
/// Throws std::domain_error for X = 0.
SubgradientSample subgradient(const NormSpec &spec, const Matrix &x,
                              const std::optional<Vector> &h = std::nullopt);

/// dR(X) = { U diag(fixed) V^T on the leading `rank` singular pairs
///           + free_scale * U0 H V0^T : ||H||_op <= 1 },
/// with U0, V0 the trailing columns of the full singular bases.
struct SubdifferentialStructure {
  Svd svd;
  int rank = 0;
  Vector fixed;
  double free_scale = 0.0;
};

SubdifferentialStructure subdifferential_structure(const NormSpec &spec, const Matrix &x);

} // namespace smc
