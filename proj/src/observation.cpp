#include "smc/observation.hpp"

#include <cmath>
#include <stdexcept>

#include "smc/random.hpp"

namespace smc {

namespace {

void check_dims(int rows, int cols) {
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("matrix dimensions must be positive");
}

void check_match(const Matrix &x, const ObservationSet &omega) {
  if (x.rows() != omega.rows() || x.cols() != omega.cols())
    throw std::invalid_argument("matrix is " + std::to_string(x.rows()) + "x" +
                                std::to_string(x.cols()) +
                                " but observation set is " +
                                std::to_string(omega.rows()) + "x" +
                                std::to_string(omega.cols()));
}

// log E|X|^p for the unit-variance families.
double log_abs_moment(NoiseKind kind, double p) {
  switch (kind) {
  case NoiseKind::Gaussian:
    return 0.5 * p * std::log(2.0) + std::lgamma(0.5 * (p + 1.0)) -
           0.5 * std::log(M_PI);
  case NoiseKind::Rademacher:
    return 0.0;
  case NoiseKind::UniformBounded:
    // Uniform on [-sqrt(3), sqrt(3)].
    return 0.5 * p * std::log(3.0) - std::log(p + 1.0);
  }
  throw std::logic_error("unknown noise kind");
}

} // namespace

ObservationSet::ObservationSet(int rows, int cols, std::vector<Cell> cells)
    : rows_(rows), cols_(cols), cells_(std::move(cells)) {
  check_dims(rows, cols);
  for (const Cell &c : cells_)
    if (c.row < 0 || c.row >= rows_ || c.col < 0 || c.col >= cols_)
      throw std::out_of_range("observation index (" + std::to_string(c.row + 1) +
                              "," + std::to_string(c.col + 1) +
                              ") outside matrix bounds");
}

Matrix ObservationSet::counts() const {
  Matrix c = Matrix::Zero(rows_, cols_);
  for (const Cell &cell : cells_)
    c(cell.row, cell.col) += 1.0;
  return c;
}

ObservationSet ObservationSet::prefix(std::size_t m) const {
  if (m > cells_.size())
    throw std::out_of_range("prefix longer than observation set");
  return ObservationSet(rows_, cols_,
                        std::vector<Cell>(cells_.begin(), cells_.begin() + m));
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "gaussian")
    return NoiseKind::Gaussian;
  if (name == "rademacher")
    return NoiseKind::Rademacher;
  if (name == "uniform-bounded" || name == "uniform")
    return NoiseKind::UniformBounded;
  throw std::invalid_argument("unknown noise kind '" + std::string(name) + "'");
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
  case NoiseKind::Gaussian:
    return "gaussian";
  case NoiseKind::Rademacher:
    return "rademacher";
  case NoiseKind::UniformBounded:
    return "uniform-bounded";
  }
  return "unknown";
}

double subgaussian_norm(NoiseKind kind) {
  // p^{-1/2} ||X||_p is unimodal in p for these families; a fine grid on
  // [1, 64] followed by golden-section refinement is plenty.
  auto f = [kind](double p) { return std::exp(log_abs_moment(kind, p) / p) / std::sqrt(p); };
  double best_p = 1.0, best = f(1.0);
  for (double p = 1.0; p <= 64.0; p += 0.01) {
    double v = f(p);
    if (v > best) {
      best = v;
      best_p = p;
    }
  }
  double lo = std::max(1.0, best_p - 0.01), hi = best_p + 0.01;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 100; ++it) {
    double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
    if (f(a) > f(b))
      hi = b;
    else
      lo = a;
  }
  return std::max(best, f(0.5 * (lo + hi)));
}

void require_finite(const Matrix &x, std::string_view what) {
  if (!x.allFinite())
    throw std::invalid_argument(std::string(what) + " contains non-finite entries");
}

ObservationSet sample_omega(int rows, int cols, std::int64_t m, std::uint64_t seed) {
  check_dims(rows, cols);
  if (m < 0)
    throw std::invalid_argument("sample_omega: m must be nonnegative");
  Rng rng(seed, 0x0b5e);
  const std::int64_t n = static_cast<std::int64_t>(rows) * cols;
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(m));
  for (std::int64_t k = 0; k < m; ++k) {
    std::int64_t flat = rng.uniform_int(n);
    cells.push_back({static_cast<int>(flat / cols), static_cast<int>(flat % cols)});
  }
  return ObservationSet(rows, cols, std::move(cells));
}

ObservationSet full_observation(int rows, int cols) {
  check_dims(rows, cols);
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(rows) * cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      cells.push_back({i, j});
  return ObservationSet(rows, cols, std::move(cells));
}

Vector project_omega(const Matrix &x, const ObservationSet &omega) {
  check_match(x, omega);
  Vector out(static_cast<Eigen::Index>(omega.size()));
  for (std::size_t k = 0; k < omega.size(); ++k)
    out(static_cast<Eigen::Index>(k)) = x(omega[k].row, omega[k].col);
  return out;
}

Matrix adjoint_omega(const Vector &v, const ObservationSet &omega) {
  if (static_cast<std::size_t>(v.size()) != omega.size())
    throw std::invalid_argument("adjoint_omega: vector length " +
                                std::to_string(v.size()) +
                                " does not match |Omega| = " +
                                std::to_string(omega.size()));
  Matrix out = Matrix::Zero(omega.rows(), omega.cols());
  for (std::size_t k = 0; k < omega.size(); ++k)
    out(omega[k].row, omega[k].col) += v(static_cast<Eigen::Index>(k));
  return out;
}

double spikiness(const Matrix &x) {
  const double fro = x.norm();
  if (fro == 0.0)
    throw std::domain_error("spikiness undefined for the zero matrix");
  const double dim = static_cast<double>(x.rows()) * static_cast<double>(x.cols());
  return std::sqrt(dim) * x.cwiseAbs().maxCoeff() / fro;
}

Vector draw_noise(NoiseKind kind, std::size_t m, std::uint64_t seed, std::uint64_t stream) {
  Rng rng(seed, stream);
  Vector eta(static_cast<Eigen::Index>(m));
  const double half_width = std::sqrt(3.0);
  for (Eigen::Index k = 0; k < eta.size(); ++k) {
    switch (kind) {
    case NoiseKind::Gaussian:
      eta(k) = rng.normal();
      break;
    case NoiseKind::Rademacher:
      eta(k) = rng.rademacher();
      break;
    case NoiseKind::UniformBounded:
      eta(k) = rng.uniform(-half_width, half_width);
      break;
    }
  }
  return eta;
}

Vector generate_observations(const Matrix &theta, const ObservationSet &omega,
                             const NoiseModel &noise, std::uint64_t seed) {
  if (noise.scale < 0.0)
    throw std::invalid_argument("noise scale must be nonnegative");
  Vector y = project_omega(theta, omega);
  if (noise.scale == 0.0)
    return y;
  return y + noise.scale * draw_noise(noise.kind, omega.size(), seed, 0x401e);
}

} // namespace smc
