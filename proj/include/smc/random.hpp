#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace smc {

/// Mixes a (seed, stream) pair into an independent 64-bit engine seed
/// (SplitMix64 finalizer applied twice).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Reproducible random stream identified by (seed, stream-id).
///
/// Parallel Monte Carlo draws take one stream each, so results do not depend
/// on scheduling.
class Rng {
public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  double normal();
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  std::int64_t uniform_int(std::int64_t n); // {0, ..., n-1}
  double rademacher();

  Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols);
  Eigen::VectorXd gaussian_vector(Eigen::Index n);

  std::mt19937_64 &engine() { return engine_; }

private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace smc
