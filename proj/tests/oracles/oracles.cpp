#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace oracle {

std::vector<std::vector<int>> subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(k);
  std::iota(cur.begin(), cur.end(), 0);
  if (k <= 0 || k > n)
    return out;
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[i] == n - k + i)
      --i;
    if (i < 0)
      break;
    ++cur[i];
    for (int j = i + 1; j < k; ++j)
      cur[j] = cur[j - 1] + 1;
  }
  return out;
}

namespace {

double max_group_norm(const Vector &y, const std::vector<std::vector<int>> &groups) {
  double best = 0.0;
  for (const auto &g : groups) {
    double s = 0.0;
    for (int i : g)
      s += y[i] * y[i];
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

} // namespace

Bracket group_decomposition_norm(const Vector &x, int k, int max_iter, double gap_tol) {
  const int n = static_cast<int>(x.size());
  if (k < 1 || k > n)
    throw std::invalid_argument("k out of range");
  const auto groups = subsets(n, k);
  const int ng = static_cast<int>(groups.size());
  // Every coordinate lies in the same number of groups.
  const double per_coord = static_cast<double>(ng) * k / n;
  Bracket out;
  if (x.norm() == 0.0)
    return out;
  const double gamma = x.norm() / ng;
  Matrix z = Matrix::Zero(k, ng); // column g holds the entries on groups[g]
  Matrix v(k, ng), w(k, ng);
  auto project = [&](const Matrix &a) {
    Vector sum = Vector::Zero(n);
    for (int g = 0; g < ng; ++g)
      for (int j = 0; j < k; ++j)
        sum[groups[g][j]] += a(j, g);
    const Vector corr = (x - sum) / per_coord;
    Matrix p = a;
    for (int g = 0; g < ng; ++g)
      for (int j = 0; j < k; ++j)
        p(j, g) += corr[groups[g][j]];
    return std::pair(p, corr);
  };
  for (int it = 1; it <= max_iter; ++it) {
    auto [p, corr] = project(z);
    v = std::move(p);
    const Matrix r = 2.0 * v - z;
    for (int g = 0; g < ng; ++g) {
      const double nrm = r.col(g).norm();
      w.col(g) = nrm > gamma ? Vector((1.0 - gamma / nrm) * r.col(g)) : Vector::Zero(k);
    }
    z += w - v;
    out.iterations = it;
    if (it % 200 == 0 || it == max_iter) {
      double upper = 0.0;
      for (int g = 0; g < ng; ++g)
        upper += v.col(g).norm();
      // At a fixed point (v - z) / gamma is constant across groups on each
      // coordinate and equals a dual certificate y.
      Vector y = Vector::Zero(n);
      for (int g = 0; g < ng; ++g)
        for (int j = 0; j < k; ++j)
          y[groups[g][j]] += (v(j, g) - z(j, g)) / gamma / per_coord;
      const double scale = max_group_norm(y, groups);
      const double lower = scale > 0.0 ? std::max(0.0, y.dot(x) / scale) : 0.0;
      out.upper = upper;
      out.lower = std::max(out.lower, lower);
      if (out.upper - out.lower <= gap_tol * out.upper)
        break;
    }
  }
  return out;
}

Vector jacobi_singular_values(const Matrix &x) {
  Eigen::JacobiSVD<Matrix> svd(x);
  return svd.singularValues();
}

Bracket spectral_ksupport_norm(const Matrix &x, int k) {
  return group_decomposition_norm(jacobi_singular_values(x), k);
}

Vector dykstra_dual_ball_projection(const Vector &z, int k, double radius, int max_sweeps,
                                    double tol) {
  const int n = static_cast<int>(z.size());
  const auto groups = subsets(n, k);
  std::vector<Vector> incr(groups.size(), Vector::Zero(n));
  Vector w = z;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const Vector before = w;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const Vector a = w + incr[g];
      Vector p = a;
      double s = 0.0;
      for (int i : groups[g])
        s += a[i] * a[i];
      s = std::sqrt(s);
      if (s > radius)
        for (int i : groups[g])
          p[i] *= radius / s;
      incr[g] = a - p;
      w = p;
    }
    if ((w - before).norm() <= tol * std::max(1.0, z.norm()))
      break;
  }
  return w;
}

Vector vector_ksupport_prox(const Vector &z, int k, double t) {
  return z - dykstra_dual_ball_projection(z, k, t);
}

namespace {

int effective_k(const smc::NormSpec &spec, const Matrix &x) {
  const int p = static_cast<int>(std::min(x.rows(), x.cols()));
  switch (spec.kind()) {
  case smc::NormKind::Frobenius:
    return p;
  case smc::NormKind::Nuclear:
    return 1;
  case smc::NormKind::SpectralKSupport:
    return spec.k();
  }
  return 1;
}

} // namespace

Matrix matrix_prox(const smc::NormSpec &spec, const Matrix &z, double t) {
  Eigen::JacobiSVD<Matrix> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s = vector_ksupport_prox(svd.singularValues(), effective_k(spec, z), t);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

double composite_objective(const smc::NormSpec &spec, const Matrix &x, const Matrix &z, double t) {
  const Bracket r = group_decomposition_norm(jacobi_singular_values(x), effective_k(spec, x));
  return 0.5 * (x - z).squaredNorm() + t * r.upper;
}

double dual_ksupport_ascent(const Matrix &x, int k, int restarts, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  double best = 0.0;
  for (int r = 0; r < restarts; ++r) {
    Matrix v(x.cols(), k);
    for (Eigen::Index i = 0; i < v.size(); ++i)
      v.data()[i] = normal(gen);
    Matrix u;
    double value = 0.0;
    for (int it = 0; it < 500; ++it) {
      u = Eigen::HouseholderQR<Matrix>(x * v).householderQ() * Matrix::Identity(x.rows(), k);
      v = Eigen::HouseholderQR<Matrix>(x.transpose() * u).householderQ() *
          Matrix::Identity(x.cols(), k);
      const double next = (u.transpose() * x * v).norm();
      if (std::abs(next - value) <= 1e-15 * next) {
        value = next;
        break;
      }
      value = next;
    }
    best = std::max(best, value);
  }
  return best;
}

double expected_gaussian_norm(int n) {
  return std::sqrt(2.0) * std::exp(std::lgamma((n + 1) / 2.0) - std::lgamma(n / 2.0));
}

double chi_square_statistic(const std::vector<double> &observed, const std::vector<double> &expected) {
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i)
    s += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  return s;
}

double loglog_slope(const std::vector<double> &x, const std::vector<double> &y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

std::filesystem::path fixture_dir() {
#ifdef SMC_FIXTURE_DIR
  return SMC_FIXTURE_DIR;
#else
  return "tests/fixtures";
#endif
}

} // namespace oracle
