#include "smc/norms.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace smc {

namespace {

constexpr double kRankTolerance = 1e-12;

int min_dim(const Matrix &x) { return static_cast<int>(std::min(x.rows(), x.cols())); }

void check_k(int k, Eigen::Index dim) {
  if (k < 1 || k > dim)
    throw std::invalid_argument("k-support parameter k = " + std::to_string(k) +
                                " out of range [1, " + std::to_string(dim) + "]");
}

void check_sorted(const Vector &sigma) {
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (!(sigma(i) >= 0.0))
      throw std::invalid_argument("threshold search needs nonnegative values");
    if (i > 0 && sigma(i) > sigma(i - 1))
      throw std::invalid_argument("threshold search needs nonincreasing values");
  }
}

// Magnitudes sorted nonincreasing, with the permutation that produced them.
struct SortedMagnitudes {
  Vector values;
  std::vector<Eigen::Index> order;
};

SortedMagnitudes sort_magnitudes(const Vector &z) {
  SortedMagnitudes out;
  out.order.resize(static_cast<std::size_t>(z.size()));
  std::iota(out.order.begin(), out.order.end(), Eigen::Index{0});
  std::stable_sort(out.order.begin(), out.order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(z(a)) > std::abs(z(b));
  });
  out.values.resize(z.size());
  for (std::size_t i = 0; i < out.order.size(); ++i)
    out.values(static_cast<Eigen::Index>(i)) = std::abs(z(out.order[i]));
  return out;
}

double sorted_ksupport_norm(const Vector &sigma, int k) {
  const KSupportDecomposition dec = find_kr_threshold(sigma, k);
  const int head = dec.head_size();
  const double head_sq = sigma.head(head).squaredNorm();
  const double tail = sigma.tail(sigma.size() - head).sum();
  return std::sqrt(head_sq + tail * tail / (dec.r + 1));
}

// Projection of a sorted nonnegative vector onto {||top-k(w)||_2 <= radius}.
//
// The solution scales a head block by 1/(1+mu), flattens a block straddling
// position k to a common value theta and leaves the rest untouched. Every
// (head, block end) pair is tried; the KKT-consistent one is the projection.
Vector project_sorted_topk(const Vector &a, int k, double radius) {
  const int p = static_cast<int>(a.size());
  const double r2 = radius * radius;
  if (a.head(k).squaredNorm() <= r2)
    return a;

  std::vector<double> prefix_sq(static_cast<std::size_t>(p) + 1, 0.0);
  std::vector<double> prefix(static_cast<std::size_t>(p) + 1, 0.0);
  for (int i = 0; i < p; ++i) {
    prefix_sq[i + 1] = prefix_sq[i] + a(i) * a(i);
    prefix[i + 1] = prefix[i] + a(i);
  }

  const double slack = 1e-12 * std::max(1.0, a(0));
  Vector best;
  double best_dist = std::numeric_limits<double>::infinity();

  auto consider = [&](const Vector &w) {
    double dist = (w - a).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = w;
    }
  };

  // No flattened block: the k largest entries are scaled.
  {
    const double scale = std::sqrt(prefix_sq[k]) / radius;
    if (k == p || a(k) <= a(k - 1) / scale + slack) {
      Vector w = a;
      w.head(k) /= scale;
      consider(w);
    }
  }

  for (int q = 0; q < k; ++q) {
    const double head_sq = prefix_sq[q];
    const int slots = k - q;
    for (int u = k; u <= p; ++u) {
      const int block = u - q;
      const double sum = prefix[u] - prefix[q];
      if (sum <= 0.0)
        continue;
      auto theta_of = [&](double mu) { return sum / (block + mu * slots); };
      auto excess = [&](double mu) {
        const double th = theta_of(mu);
        return head_sq / ((1.0 + mu) * (1.0 + mu)) + slots * th * th - r2;
      };
      if (excess(0.0) <= 0.0)
        continue;
      double lo = 0.0, hi = 1.0;
      while (excess(hi) > 0.0)
        hi *= 2.0;
      for (int it = 0; it < 200 && hi - lo > 1e-17 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) > 0.0 ? lo : hi) = mid;
      }
      const double mu = 0.5 * (lo + hi);
      const double theta = theta_of(mu);
      const bool above_ok = q == 0 || a(q - 1) / (1.0 + mu) + slack >= theta;
      const bool block_top_ok = a(q) <= theta * (1.0 + mu) + slack;
      const bool block_bottom_ok = a(u - 1) + slack >= theta;
      const bool below_ok = u == p || a(u) <= theta + slack;
      if (!(above_ok && block_top_ok && block_bottom_ok && below_ok))
        continue;
      Vector w = a;
      w.head(q) /= (1.0 + mu);
      w.segment(q, block).setConstant(theta);
      consider(w);
    }
  }
  if (best.size() == 0)
    throw std::runtime_error("top-k ball projection found no consistent threshold");
  return best;
}

Matrix reassemble(const Svd &svd, const Vector &values) {
  const Eigen::Index p = values.size();
  return svd.u.leftCols(p) * values.asDiagonal() * svd.v.leftCols(p).transpose();
}

// Thin SVD is enough when the null space bases are not needed.
Svd svd_thin(const Matrix &x) {
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

} // namespace

NormSpec NormSpec::spectral_k_support(int k) {
  if (k < 1)
    throw std::invalid_argument("spectral k-support norm needs k >= 1");
  return NormSpec(NormKind::SpectralKSupport, k);
}

NormSpec NormSpec::parse(std::string_view text) {
  if (text == "frobenius")
    return frobenius();
  if (text == "nuclear")
    return nuclear();
  constexpr std::string_view prefix = "kspectral:k=";
  if (text.substr(0, prefix.size()) == prefix) {
    std::string_view digits = text.substr(prefix.size());
    int k = 0;
    auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc() && end == digits.data() + digits.size())
      return spectral_k_support(k);
  }
  throw std::invalid_argument("unknown norm spec '" + std::string(text) +
                              "' (expected frobenius, nuclear or kspectral:k=<int>)");
}

std::string NormSpec::to_string() const {
  switch (kind_) {
  case NormKind::Frobenius:
    return "frobenius";
  case NormKind::Nuclear:
    return "nuclear";
  case NormKind::SpectralKSupport:
    return "kspectral:k=" + std::to_string(k_);
  }
  return "unknown";
}

void NormSpec::check_dims(Eigen::Index rows, Eigen::Index cols) const {
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("matrix dimensions must be positive");
  if (kind_ == NormKind::SpectralKSupport)
    check_k(k_, std::min(rows, cols));
}

Svd svd_full(const Matrix &x) {
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

int numerical_rank(const Vector &sigma) {
  if (sigma.size() == 0 || sigma(0) <= 0.0)
    return 0;
  const double cut = kRankTolerance * sigma(0);
  int s = 0;
  while (s < sigma.size() && sigma(s) > cut)
    ++s;
  return s;
}

KSupportDecomposition find_kr_threshold(const Vector &sigma, int k) {
  check_sorted(sigma);
  const int p = static_cast<int>(sigma.size());
  check_k(k, p);

  std::vector<double> suffix(static_cast<std::size_t>(p) + 1, 0.0);
  for (int i = p - 1; i >= 0; --i)
    suffix[i] = suffix[i + 1] + sigma(i);

  // Violation of the defining inequality for candidate r (0 when it holds).
  auto violation = [&](int r) {
    const int b = k - r - 1; // 0-based position of sigma_{k-r}
    const double avg = suffix[b] / (r + 1);
    const double upper = b == 0 ? std::numeric_limits<double>::infinity() : sigma(b - 1);
    double v = 0.0;
    if (!(upper > avg))
      v = std::max(v, avg - upper + std::numeric_limits<double>::min());
    if (!(avg >= sigma(b)))
      v = std::max(v, sigma(b) - avg);
    return v;
  };

  int chosen = -1;
  for (int r = 0; r < k && chosen < 0; ++r)
    if (violation(r) == 0.0)
      chosen = r;
  if (chosen < 0) {
    // Only reachable through rounding at exact ties: take the least violated r.
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < k; ++r) {
      double v = violation(r);
      if (v < best) {
        best = v;
        chosen = r;
      }
    }
  }

  KSupportDecomposition dec;
  dec.r = chosen;
  dec.k = k;
  dec.dim = p;
  dec.rank = numerical_rank(sigma);
  return dec;
}

double vector_ksupport_norm(const Vector &z, int k) {
  check_k(k, z.size());
  return sorted_ksupport_norm(sort_magnitudes(z).values, k);
}

double vector_ksupport_dual(const Vector &z, int k) {
  check_k(k, z.size());
  return sort_magnitudes(z).values.head(k).norm();
}

Vector project_topk_ball(const Vector &z, int k, double radius) {
  check_k(k, z.size());
  if (!(radius >= 0.0))
    throw std::invalid_argument("ball radius must be nonnegative");
  if (radius == 0.0)
    return Vector::Zero(z.size());
  SortedMagnitudes sorted = sort_magnitudes(z);
  Vector w_sorted = project_sorted_topk(sorted.values, k, radius);
  Vector w(z.size());
  for (std::size_t i = 0; i < sorted.order.size(); ++i) {
    const Eigen::Index idx = sorted.order[i];
    const double mag = w_sorted(static_cast<Eigen::Index>(i));
    w(idx) = z(idx) < 0.0 ? -mag : mag;
  }
  return w;
}

Vector vector_ksupport_prox(const Vector &z, int k, double t) {
  check_k(k, z.size());
  if (!(t > 0.0))
    throw std::invalid_argument("prox step t must be positive");
  // Moreau decomposition: prox_{t R}(z) = z - proj_{t B*}(z).
  Vector x = z - project_topk_ball(z, k, t);
  // Entries that the projection left untouched are exact zeros.
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (std::abs(x(i)) <= 1e-15 * std::max(1.0, std::abs(z(i))))
      x(i) = 0.0;
  return x;
}

double norm_value(const NormSpec &spec, const Matrix &x) {
  spec.check_dims(x.rows(), x.cols());
  switch (spec.kind()) {
  case NormKind::Frobenius:
    return x.norm();
  case NormKind::Nuclear: {
    Eigen::BDCSVD<Matrix> svd(x);
    return svd.singularValues().sum();
  }
  case NormKind::SpectralKSupport: {
    Eigen::BDCSVD<Matrix> svd(x);
    return sorted_ksupport_norm(svd.singularValues(), spec.k());
  }
  }
  throw std::logic_error("unknown norm kind");
}

double dual_norm_value(const NormSpec &spec, const Matrix &x) {
  spec.check_dims(x.rows(), x.cols());
  switch (spec.kind()) {
  case NormKind::Frobenius:
    return x.norm();
  case NormKind::Nuclear: {
    Eigen::BDCSVD<Matrix> svd(x);
    return svd.singularValues()(0);
  }
  case NormKind::SpectralKSupport: {
    Eigen::BDCSVD<Matrix> svd(x);
    return svd.singularValues().head(spec.k()).norm();
  }
  }
  throw std::logic_error("unknown norm kind");
}

Matrix prox(const NormSpec &spec, const Matrix &z, double t) {
  spec.check_dims(z.rows(), z.cols());
  if (!(t > 0.0))
    throw std::invalid_argument("prox step t must be positive");
  if (z.isZero(0.0))
    return Matrix::Zero(z.rows(), z.cols());
  switch (spec.kind()) {
  case NormKind::Frobenius: {
    const double n = z.norm();
    return n <= t ? Matrix::Zero(z.rows(), z.cols()) : Matrix((1.0 - t / n) * z);
  }
  case NormKind::Nuclear: {
    Svd svd = svd_thin(z);
    return reassemble(svd, (svd.sigma.array() - t).max(0.0).matrix());
  }
  case NormKind::SpectralKSupport: {
    Svd svd = svd_thin(z);
    return reassemble(svd, vector_ksupport_prox(svd.sigma, spec.k(), t).cwiseMax(0.0));
  }
  }
  throw std::logic_error("unknown norm kind");
}

Matrix project_dual_ball(const NormSpec &spec, const Matrix &z, double radius) {
  spec.check_dims(z.rows(), z.cols());
  if (!(radius >= 0.0))
    throw std::invalid_argument("ball radius must be nonnegative");
  switch (spec.kind()) {
  case NormKind::Frobenius: {
    const double n = z.norm();
    return n <= radius ? z : Matrix(z * (radius / n));
  }
  case NormKind::Nuclear: {
    Svd svd = svd_thin(z);
    if (svd.sigma.size() == 0 || svd.sigma(0) <= radius)
      return z;
    return reassemble(svd, svd.sigma.cwiseMin(radius));
  }
  case NormKind::SpectralKSupport: {
    Svd svd = svd_thin(z);
    if (svd.sigma.head(spec.k()).norm() <= radius)
      return z;
    return reassemble(svd, project_topk_ball(svd.sigma, spec.k(), radius));
  }
  }
  throw std::logic_error("unknown norm kind");
}

SubdifferentialStructure subdifferential_structure(const NormSpec &spec, const Matrix &x) {
  spec.check_dims(x.rows(), x.cols());
  SubdifferentialStructure out;
  out.svd = svd_full(x);
  const Vector &sigma = out.svd.sigma;
  out.rank = numerical_rank(sigma);
  if (out.rank == 0)
    throw std::domain_error("subdifferential requested at the zero matrix");
  const int s = out.rank;
  switch (spec.kind()) {
  case NormKind::Frobenius:
    out.fixed = sigma.head(s) / sigma.norm();
    out.free_scale = 0.0;
    break;
  case NormKind::Nuclear:
    out.fixed = Vector::Ones(s);
    out.free_scale = 1.0;
    break;
  case NormKind::SpectralKSupport: {
    const KSupportDecomposition dec = find_kr_threshold(sigma, spec.k());
    const double norm = sorted_ksupport_norm(sigma, spec.k());
    const int head = dec.head_size();
    const double level =
        sigma.segment(dec.averaged_begin(), dec.averaged_size()).sum() / (dec.r + 1);
    out.fixed.resize(s);
    out.fixed.head(head) = sigma.head(head) / norm;
    out.fixed.tail(s - head).setConstant(level / norm);
    out.free_scale = level / norm;
    break;
  }
  }
  return out;
}

SubgradientSample subgradient(const NormSpec &spec, const Matrix &x,
                              const std::optional<Vector> &h) {
  const SubdifferentialStructure sd = subdifferential_structure(spec, x);
  const int p = min_dim(x);
  Vector diag = Vector::Zero(p);
  diag.head(sd.rank) = sd.fixed;
  if (h) {
    if (h->size() != p)
      throw std::invalid_argument("subgradient: h must have min(rows, cols) entries");
    if (h->size() > 0 && h->cwiseAbs().maxCoeff() > 1.0 + 1e-12)
      throw std::invalid_argument("subgradient: ||h||_inf must be at most 1");
    diag.tail(p - sd.rank) = sd.free_scale * h->tail(p - sd.rank);
  }
  return {reassemble(sd.svd, diag), spec.kind()};
}

} // namespace smc
