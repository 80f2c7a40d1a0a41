#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles/oracles.hpp"
#include "smc/observation.hpp"
#include "smc/random.hpp"

using namespace smc;

TEST_CASE("sample_omega edge cases") {
  CHECK(sample_omega(3, 4, 0, 7).empty());
  const ObservationSet one = sample_omega(1, 1, 5, 0);
  REQUIRE(one.size() == 5);
  for (const Cell &c : one.cells())
    CHECK(c == Cell{0, 0});
  CHECK_THROWS_AS(sample_omega(0, 3, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_omega(2, 3, -1, 1), std::invalid_argument);
}

TEST_CASE("sample_omega is uniform over cells") {
  const int m = 64000;
  const ObservationSet omega = sample_omega(4, 4, m, 1);
  const Matrix counts = omega.counts();
  const double p = 1.0 / 16.0;
  const double se = std::sqrt(p * (1 - p) / m);
  std::vector<double> observed, expected;
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    CHECK(std::abs(counts.data()[i] / m - p) <= 3 * se);
    observed.push_back(counts.data()[i]);
    expected.push_back(m * p);
  }
  // 99.9% quantile of chi-square with 15 degrees of freedom.
  CHECK(oracle::chi_square_statistic(observed, expected) < 37.697);
}

TEST_CASE("sample_omega is reproducible") {
  CHECK(sample_omega(5, 7, 100, 42).cells() == sample_omega(5, 7, 100, 42).cells());
  CHECK(sample_omega(5, 7, 100, 42).cells() != sample_omega(5, 7, 100, 43).cells());
  CHECK(sample_omega(5, 7, 100, 42).prefix(30).cells() == sample_omega(5, 7, 30, 42).cells());
}

TEST_CASE("observation set validation and counts") {
  CHECK_THROWS_AS(ObservationSet(2, 2, {{2, 0}}), std::out_of_range);
  CHECK_THROWS_AS(ObservationSet(2, 2, {{0, -1}}), std::out_of_range);
  const ObservationSet omega(2, 3, {{0, 1}, {1, 2}, {0, 1}});
  Matrix expected = Matrix::Zero(2, 3);
  expected(0, 1) = 2;
  expected(1, 2) = 1;
  CHECK(omega.counts() == expected);
  const ObservationSet full = full_observation(2, 3);
  REQUIRE(full.size() == 6);
  CHECK(full[1] == Cell{0, 1});
  CHECK(full.counts() == Matrix::Ones(2, 3));
}

TEST_CASE("project_omega") {
  const ObservationSet any = sample_omega(3, 3, 8, 3);
  CHECK(project_omega(Matrix::Zero(3, 3), any) == Vector::Zero(8));
  const ObservationSet diag(2, 2, {{0, 0}, {1, 1}, {0, 0}});
  CHECK(project_omega(Matrix::Ones(2, 2), diag) == Vector::Ones(3));

  Rng rng(9);
  const Matrix x = rng.gaussian_matrix(3, 3);
  const ObservationSet omega = sample_omega(3, 3, 5, 4);
  const Vector p = project_omega(x, omega);
  for (std::size_t k = 0; k < omega.size(); ++k)
    CHECK(p[k] == x(omega[k].row, omega[k].col));
  CHECK_THROWS_AS(project_omega(Matrix::Zero(3, 4), omega), std::invalid_argument);
}

TEST_CASE("adjoint_omega") {
  const ObservationSet omega = sample_omega(3, 4, 6, 5);
  CHECK(adjoint_omega(Vector::Zero(6), omega) == Matrix::Zero(3, 4));
  const ObservationSet dup(2, 2, {{0, 0}, {0, 0}});
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 2;
  CHECK(adjoint_omega(Vector::Ones(2), dup) == expected);
  CHECK_THROWS_AS(adjoint_omega(Vector::Zero(5), omega), std::invalid_argument);
}

TEST_CASE("adjoint identity on random inputs") {
  for (int trial = 0; trial < 50; ++trial) {
    Rng rng(11, trial);
    const int d1 = 1 + trial % 7, d2 = 2 + trial % 5;
    const ObservationSet omega = sample_omega(d1, d2, 3 * trial + 1, trial);
    const Matrix x = rng.gaussian_matrix(d1, d2);
    const Vector v = rng.gaussian_vector(static_cast<Eigen::Index>(omega.size()));
    const double lhs = project_omega(x, omega).dot(v);
    const double rhs = frobenius_inner(x, adjoint_omega(v, omega));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("sampled quadratic form is unbiased") {
  Rng rng(12);
  Matrix x = rng.gaussian_matrix(5, 6);
  x /= x.norm();
  const int m = 20, reps = 10000;
  std::vector<double> values;
  for (int r = 0; r < reps; ++r) {
    const ObservationSet omega = sample_omega(5, 6, m, derive_seed(77, r));
    values.push_back(30.0 / m * project_omega(x, omega).squaredNorm());
  }
  double mean = 0, var = 0;
  for (double v : values)
    mean += v;
  mean /= reps;
  for (double v : values)
    var += (v - mean) * (v - mean);
  const double se = std::sqrt(var / (reps - 1) / reps);
  CHECK(std::abs(mean - 1.0) <= 3 * se);
}

TEST_CASE("spikiness") {
  CHECK(spikiness(Matrix::Ones(3, 7)) == doctest::Approx(1.0).epsilon(1e-15));
  Matrix e = Matrix::Zero(4, 5);
  e(0, 0) = 1;
  CHECK(spikiness(e) == doctest::Approx(std::sqrt(20.0)).epsilon(1e-15));
  CHECK_THROWS_AS(spikiness(Matrix::Zero(2, 2)), std::domain_error);

  Rng rng(13);
  const Matrix x = rng.gaussian_matrix(6, 6);
  const double direct = 6.0 * x.cwiseAbs().maxCoeff() / std::sqrt(x.cwiseProduct(x).sum());
  CHECK(spikiness(x) == doctest::Approx(direct).epsilon(1e-14));
  CHECK(spikiness(x) >= 1.0);
  CHECK(spikiness(x) <= 6.0);
  for (double c : {-3.0, 0.25, 7.0})
    CHECK(spikiness(c * x) == spikiness(x));
}

TEST_CASE("noise families have unit variance") {
  for (NoiseKind kind : {NoiseKind::Gaussian, NoiseKind::Rademacher, NoiseKind::UniformBounded}) {
    const Vector eta = draw_noise(kind, 200000, 3);
    const double mean = eta.mean();
    const double var = (eta.array() - mean).square().sum() / (eta.size() - 1);
    CHECK(std::abs(mean) <= 3.0 / std::sqrt(200000.0));
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
  }
  CHECK(parse_noise_kind(to_string(NoiseKind::UniformBounded)) == NoiseKind::UniformBounded);
  CHECK_THROWS_AS(parse_noise_kind("cauchy"), std::invalid_argument);
}

TEST_CASE("sub-gaussian norms") {
  CHECK(subgaussian_norm(NoiseKind::Rademacher) == doctest::Approx(1.0).epsilon(1e-12));
  // Gaussian: sup_p p^{-1/2} (E|g|^p)^{1/p} is attained at p = 1, sqrt(2/pi).
  CHECK(subgaussian_norm(NoiseKind::Gaussian) == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-9));
  CHECK(subgaussian_norm(NoiseKind::UniformBounded) > 0.0);
  CHECK(subgaussian_norm(NoiseKind::UniformBounded) <= std::sqrt(3.0));
}

TEST_CASE("generate_observations") {
  Rng rng(14);
  const Matrix theta = rng.gaussian_matrix(4, 5);
  const ObservationSet omega = sample_omega(4, 5, 30, 2);
  CHECK(generate_observations(theta, omega, {NoiseKind::Gaussian, 0.0}, 1) == project_omega(theta, omega));

  const int m = 100000;
  const double nu = 0.3;
  const ObservationSet big = sample_omega(4, 5, m, 3);
  const Vector y = generate_observations(Matrix::Zero(4, 5), big, {NoiseKind::Gaussian, nu}, 5);
  CHECK(std::abs(y.mean()) <= 3 * nu / std::sqrt(double(m)));
  const double var = (y.array() - y.mean()).square().sum() / (m - 1);
  CHECK(std::abs(var - nu * nu) <= 0.05 * nu * nu);

  const Vector r = generate_observations(theta, omega, {NoiseKind::Rademacher, 0.5}, 6);
  const Vector p = project_omega(theta, omega);
  for (Eigen::Index k = 0; k < r.size(); ++k) {
    const double e = (r[k] - p[k]) / 0.5;
    CHECK(std::abs(std::abs(e) - 1.0) <= 1e-12);
  }
  CHECK(generate_observations(theta, omega, {NoiseKind::Gaussian, 0.1}, 8) ==
        generate_observations(theta, omega, {NoiseKind::Gaussian, 0.1}, 8));
}
