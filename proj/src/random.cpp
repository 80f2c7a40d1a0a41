#include "smc/random.hpp"

#include <stdexcept>

namespace smc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : engine_(derive_seed(seed, stream)) {}

double Rng::normal() { return normal_(engine_); }

double Rng::uniform() { return uniform_(engine_); }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }

std::int64_t Rng::uniform_int(std::int64_t n) {
  if (n <= 0)
    throw std::invalid_argument("uniform_int: n must be positive");
  std::uniform_int_distribution<std::int64_t> dist(0, n - 1);
  return dist(engine_);
}

double Rng::rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

Eigen::MatrixXd Rng::gaussian_matrix(Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd g(rows, cols);
  // Fill row-major so the draw order matches the external row-major layout.
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      g(i, j) = normal();
  return g;
}

Eigen::VectorXd Rng::gaussian_vector(Eigen::Index n) {
  Eigen::VectorXd g(n);
  for (Eigen::Index i = 0; i < n; ++i)
    g(i) = normal();
  return g;
}

} // namespace smc
