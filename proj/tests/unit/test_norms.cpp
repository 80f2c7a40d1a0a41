#include <doctest.h>

#include <cmath>

#include "oracles/oracles.hpp"
#include "smc/norms.hpp"
#include "smc/random.hpp"

using namespace smc;

namespace {

Matrix random_orthogonal(Rng &rng, int n) {
  Eigen::HouseholderQR<Matrix> qr(rng.gaussian_matrix(n, n));
  return qr.householderQ();
}

std::vector<NormSpec> all_specs() {
  return {NormSpec::frobenius(), NormSpec::nuclear(), NormSpec::spectral_k_support(1),
          NormSpec::spectral_k_support(2), NormSpec::spectral_k_support(4)};
}

} // namespace

TEST_CASE("NormSpec string form") {
  CHECK(NormSpec::parse("frobenius") == NormSpec::frobenius());
  CHECK(NormSpec::parse("nuclear") == NormSpec::nuclear());
  CHECK(NormSpec::parse("kspectral:k=3") == NormSpec::spectral_k_support(3));
  CHECK(NormSpec::spectral_k_support(3).to_string() == "kspectral:k=3");
  for (const char *bad : {"", "l1", "kspectral", "kspectral:k=0", "kspectral:k=x", "kspectral:k=2x"})
    CHECK_THROWS_AS(NormSpec::parse(bad), std::invalid_argument);
  CHECK_THROWS_AS(NormSpec::spectral_k_support(5).check_dims(4, 6), std::invalid_argument);
  CHECK_NOTHROW(NormSpec::spectral_k_support(4).check_dims(4, 6));
  CHECK_THROWS_AS(norm_value(NormSpec::spectral_k_support(5), Matrix::Ones(4, 4)), std::invalid_argument);
}

TEST_CASE("k-support reduces to nuclear and Frobenius at the ends") {
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(21, trial);
    const Matrix x = rng.gaussian_matrix(4, 6);
    const double nuc = norm_value(NormSpec::nuclear(), x);
    CHECK(norm_value(NormSpec::spectral_k_support(1), x) == doctest::Approx(nuc).epsilon(1e-12));
    CHECK(norm_value(NormSpec::spectral_k_support(4), x) == doctest::Approx(x.norm()).epsilon(1e-12));
    CHECK(dual_norm_value(NormSpec::spectral_k_support(4), x) == doctest::Approx(x.norm()).epsilon(1e-12));
  }
}

TEST_CASE("k-support closed form matches the group decomposition program") {
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(22, trial);
    const Matrix x = rng.gaussian_matrix(4, 4);
    const oracle::Bracket b = oracle::spectral_ksupport_norm(x, 2);
    const double v = norm_value(NormSpec::spectral_k_support(2), x);
    CHECK(b.upper - b.lower <= 1e-8 * b.upper);
    CHECK(std::abs(v - b.upper) <= 1e-6 * b.upper);
  }
}

TEST_CASE("find_kr_threshold") {
  Vector a(4), b(4);
  a << 5, 1, 1, 1;
  b << 1, 1, 1, 1;
  CHECK(find_kr_threshold(a, 2).r == 0);
  CHECK(find_kr_threshold(b, 2).r == 1);
  const KSupportDecomposition d = find_kr_threshold(b, 2);
  CHECK(d.head_size() == 0);
  CHECK(d.averaged_begin() == 0);
  CHECK(d.averaged_size() == 4);

  Vector unsorted(3);
  unsorted << 1, 2, 0;
  CHECK_THROWS_AS(find_kr_threshold(unsorted, 1), std::invalid_argument);
  Vector negative(2);
  negative << 1, -1;
  CHECK_THROWS_AS(find_kr_threshold(negative, 1), std::invalid_argument);
  CHECK_THROWS_AS(find_kr_threshold(a, 0), std::invalid_argument);
  CHECK_THROWS_AS(find_kr_threshold(a, 5), std::invalid_argument);
}

TEST_CASE("find_kr_threshold agrees with an exhaustive scan") {
  // Independent 1-based evaluation of the defining inequality.
  auto holds = [](const Vector &s, int k, int r) {
    const double inf = std::numeric_limits<double>::infinity();
    auto sigma = [&](int i) { return i == 0 ? inf : s[i - 1]; };
    double tail = 0;
    for (int i = k - r; i <= s.size(); ++i)
      tail += sigma(i);
    tail /= r + 1;
    return sigma(k - r - 1) > tail && tail >= sigma(k - r);
  };
  for (int trial = 0; trial < 200; ++trial) {
    Rng rng(23, trial);
    const int d = 1 + trial % 8;
    Vector s = rng.gaussian_vector(d).cwiseAbs();
    if (trial % 3 == 0)
      s.tail(d / 2).setZero();
    std::sort(s.data(), s.data() + d, std::greater<>());
    const int k = 1 + static_cast<int>(rng.uniform_int(d));
    if (s[0] == 0.0)
      continue;
    int count = 0, found = -1;
    for (int r = 0; r < k; ++r)
      if (holds(s, k, r)) {
        ++count;
        found = r;
      }
    CHECK(count == 1);
    CHECK(find_kr_threshold(s, k).r == found);
  }
}

TEST_CASE("dual norms") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = 1;
  CHECK(dual_norm_value(NormSpec::nuclear(), d) == doctest::Approx(3.0));
  CHECK(dual_norm_value(NormSpec::frobenius(), d) == doctest::Approx(std::sqrt(10.0)));
  for (int trial = 0; trial < 5; ++trial) {
    Rng rng(24, trial);
    const Matrix x = rng.gaussian_matrix(5, 5);
    const double want = oracle::dual_ksupport_ascent(x, 2, 30, trial);
    CHECK(dual_norm_value(NormSpec::spectral_k_support(2), x) == doctest::Approx(want).epsilon(1e-4));
  }
}

TEST_CASE("norm axioms, duality and orthogonal invariance") {
  for (const NormSpec &spec : all_specs()) {
    for (int trial = 0; trial < 20; ++trial) {
      Rng rng(25, trial);
      const Matrix x = rng.gaussian_matrix(4, 5), y = rng.gaussian_matrix(4, 5);
      const double rx = norm_value(spec, x), ry = norm_value(spec, y);
      CHECK(rx > 0.0);
      CHECK(norm_value(spec, Matrix::Zero(4, 5)) == 0.0);
      CHECK(norm_value(spec, -2.5 * x) == doctest::Approx(2.5 * rx).epsilon(1e-13));
      CHECK(norm_value(spec, x + y) <= (rx + ry) * (1 + 1e-10));
      CHECK(std::abs(frobenius_inner(x, y)) <= rx * dual_norm_value(spec, y) * (1 + 1e-10));
      const Matrix u = random_orthogonal(rng, 4), v = random_orthogonal(rng, 5);
      CHECK(norm_value(spec, u * x * v.transpose()) == doctest::Approx(rx).epsilon(1e-10));
      CHECK(dual_norm_value(spec, u * x * v.transpose()) ==
            doctest::Approx(dual_norm_value(spec, x)).epsilon(1e-10));
    }
  }
}

TEST_CASE("k-support is monotone in k and sandwiched") {
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(26, trial);
    const Matrix x = rng.gaussian_matrix(5, 5);
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 5; ++k) {
      const double v = norm_value(NormSpec::spectral_k_support(k), x);
      CHECK(v <= prev * (1 + 1e-12));
      CHECK(v >= x.norm() * (1 - 1e-12));
      CHECK(v <= norm_value(NormSpec::nuclear(), x) * (1 + 1e-12));
      prev = v;
    }
  }
}

TEST_CASE("vector k-support prox") {
  Rng rng(27);
  const Vector z = rng.gaussian_vector(6);
  // Norm prox at k = dim is block soft-thresholding; z / (1 + t) is the prox of
  // the half-squared norm, so it is not expected here.
  const double t = 0.4;
  CHECK((vector_ksupport_prox(z, 6, t) - std::max(0.0, 1 - t / z.norm()) * z).norm() <= 1e-12);
  Vector soft = z;
  for (Eigen::Index i = 0; i < soft.size(); ++i)
    soft[i] = std::copysign(std::max(0.0, std::abs(z[i]) - t), z[i]);
  CHECK((vector_ksupport_prox(z, 1, t) - soft).norm() <= 1e-12);
  for (int trial = 0; trial < 20; ++trial) {
    Rng r(28, trial);
    const Vector w = r.gaussian_vector(6);
    const Vector mine = vector_ksupport_prox(w, 3, 0.5);
    CHECK((mine - oracle::vector_ksupport_prox(w, 3, 0.5)).norm() <= 1e-7);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      CHECK(mine[i] * w[i] >= 0.0);
      for (Eigen::Index j = 0; j < w.size(); ++j)
        if (std::abs(w[i]) > std::abs(w[j]))
          CHECK(std::abs(mine[i]) >= std::abs(mine[j]) - 1e-12);
    }
  }
  CHECK_THROWS_AS(vector_ksupport_prox(z, 7, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(vector_ksupport_prox(z, 2, 0.0), std::invalid_argument);
}

TEST_CASE("matrix prox") {
  Matrix z = Matrix::Zero(2, 2);
  z(0, 0) = 3;
  z(1, 1) = 1;
  Matrix want = Matrix::Zero(2, 2);
  want(0, 0) = 2;
  CHECK((prox(NormSpec::nuclear(), z, 1.0) - want).norm() <= 1e-12);
  Rng rng(29);
  const Matrix r = rng.gaussian_matrix(4, 5);
  for (const NormSpec &spec : all_specs()) {
    CHECK((prox(spec, r, 1e-12) - r).norm() <= 1e-9);
    CHECK(prox(spec, Matrix::Zero(4, 5), 0.3) == Matrix::Zero(4, 5));
    CHECK_THROWS_AS(prox(spec, r, 0.0), std::invalid_argument);
  }
}

TEST_CASE("k-support matrix prox matches the descent oracle") {
  const NormSpec spec = NormSpec::spectral_k_support(2);
  for (int trial = 0; trial < 5; ++trial) {
    Rng rng(30, trial);
    const Matrix z = rng.gaussian_matrix(4, 4);
    const double t = 0.7;
    const Matrix p = prox(spec, z, t);
    const double mine = oracle::composite_objective(spec, p, z, t);
    const double ref = oracle::composite_objective(spec, oracle::matrix_prox(spec, z, t), z, t);
    CHECK(mine <= ref + 1e-8);
    // No small perturbation does better.
    for (int k = 0; k < 50; ++k) {
      const Matrix q = p + 1e-4 * rng.gaussian_matrix(4, 4);
      CHECK(0.5 * (q - z).squaredNorm() + t * norm_value(spec, q) >=
            0.5 * (p - z).squaredNorm() + t * norm_value(spec, p) - 1e-12);
    }
  }
}

TEST_CASE("prox satisfies the Fenchel characterization") {
  for (const NormSpec &spec : all_specs()) {
    for (int trial = 0; trial < 200; ++trial) {
      Rng rng(31, trial);
      const Matrix z = rng.gaussian_matrix(4, 4 + trial % 3);
      const double t = 0.05 + 2.0 * rng.uniform();
      const Matrix p = prox(spec, z, t);
      if (p.norm() == 0.0) {
        CHECK(dual_norm_value(spec, z) <= t * (1 + 1e-9));
        continue;
      }
      CHECK(frobenius_inner(z - p, p) == doctest::Approx(t * norm_value(spec, p)).epsilon(1e-8));
      CHECK(dual_norm_value(spec, (z - p) / t) <= 1 + 1e-6);
    }
  }
}

TEST_CASE("dual ball projection") {
  Rng rng(32);
  const Matrix z = 3.0 * rng.gaussian_matrix(4, 4);
  for (const NormSpec &spec : all_specs()) {
    const Matrix p = project_dual_ball(spec, z, 0.8);
    CHECK(dual_norm_value(spec, p) <= 0.8 * (1 + 1e-9));
    CHECK((p + prox(spec, z, 0.8) - z).norm() <= 1e-9);
  }
}

TEST_CASE("subgradients") {
  Rng rng(33);
  const Matrix x = rng.gaussian_matrix(4, 4);
  const SubgradientSample g = subgradient(NormSpec::nuclear(), x);
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  CHECK((g.w - svd.matrixU() * svd.matrixV().transpose()).norm() <= 1e-9);
  CHECK(frobenius_inner(g.w, x) == doctest::Approx(norm_value(NormSpec::nuclear(), x)).epsilon(1e-12));
  CHECK_THROWS_AS(subgradient(NormSpec::nuclear(), Matrix::Zero(3, 3)), std::domain_error);

  for (const NormSpec &spec : all_specs()) {
    for (int trial = 0; trial < 20; ++trial) {
      Rng r(34, trial);
      const int rank = 1 + trial % 4;
      const Matrix a = r.gaussian_matrix(4, rank) * r.gaussian_matrix(rank, 5);
      const SubgradientSample s = subgradient(spec, a);
      CHECK(frobenius_inner(s.w, a) == doctest::Approx(norm_value(spec, a)).epsilon(1e-9));
      CHECK(dual_norm_value(spec, s.w) <= 1 + 1e-8);
    }
  }
}

TEST_CASE("k-support subgradient inequality at a rank-deficient point") {
  const NormSpec spec = NormSpec::spectral_k_support(2);
  Rng rng(35);
  const Matrix x = rng.gaussian_matrix(5, 2) * rng.gaussian_matrix(2, 5);
  Vector h = Vector::Zero(5);
  h.tail(3) << 1.0, -1.0, 0.5;
  const SubgradientSample s = subgradient(spec, x, h);
  CHECK(dual_norm_value(spec, s.w) <= 1 + 1e-8);
  const double rx = norm_value(spec, x);
  for (int k = 0; k < 1000; ++k) {
    const Matrix y = x + rng.gaussian_matrix(5, 5) * (0.01 + 2.0 * rng.uniform());
    CHECK(norm_value(spec, y) >= rx + frobenius_inner(s.w, y - x) - 1e-9 * (1 + rx));
  }
  Vector too_big = h;
  too_big[4] = 1.5;
  CHECK_THROWS_AS(subgradient(spec, x, too_big), std::invalid_argument);
}

TEST_CASE("subdifferential structure describes valid subgradients") {
  Rng rng(36);
  const Matrix x = rng.gaussian_matrix(5, 2) * rng.gaussian_matrix(2, 6);
  for (const NormSpec &spec : all_specs()) {
    const SubdifferentialStructure st = subdifferential_structure(spec, x);
    CHECK(st.rank == 2);
    const int p = 5;
    Matrix h = Matrix::Zero(p - st.rank, 6 - st.rank);
    for (int i = 0; i < h.rows(); ++i)
      h(i, i) = i % 2 ? -1.0 : 1.0;
    const Matrix w = st.svd.u.leftCols(st.rank) * st.fixed.asDiagonal() *
                         st.svd.v.leftCols(st.rank).transpose() +
                     st.free_scale * st.svd.u.rightCols(p - st.rank) * h *
                         st.svd.v.rightCols(6 - st.rank).transpose();
    CHECK(frobenius_inner(w, x) == doctest::Approx(norm_value(spec, x)).epsilon(1e-9));
    CHECK(dual_norm_value(spec, w) <= 1 + 1e-8);
  }
}
