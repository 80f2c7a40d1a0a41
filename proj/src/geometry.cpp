#include "smc/geometry.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "smc/matrix_io.hpp"
#include "smc/parallel.hpp"

namespace smc {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kMembershipSlack = 1e-9;
// Smallest accepted witness step, relative to ||anchor||_F. Below it the
// slack would admit directions with a positive directional derivative.
constexpr double kMinWitness = 1e-6;
constexpr std::uint64_t kPoolStream = 0x9001;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

GeometryEstimate finish(std::string name, std::vector<double> draws, EstimateDirection direction,
                        std::uint64_t seed, Clock::time_point start) {
  GeometryEstimate est;
  est.name = std::move(name);
  auto [mean, se] = mean_and_stderr(draws);
  est.value = mean;
  est.standard_error = se;
  est.samples = static_cast<int>(draws.size());
  est.direction = direction;
  est.seed = seed;
  est.draws = std::move(draws);
  est.wall_time = seconds_since(start);
  return est;
}

std::optional<Matrix> normalized(const Matrix &v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n))
    return std::nullopt;
  return Matrix(v / n);
}

struct BlockView {
  Matrix b;  // U^T v V in the anchor's singular bases
  int s = 0; // rank of the anchor
};

} // namespace

std::string to_string(EstimateDirection direction) {
  switch (direction) {
  case EstimateDirection::LowerBound:
    return "lower-bound";
  case EstimateDirection::UpperBound:
    return "upper-bound";
  case EstimateDirection::Unbiased:
    return "unbiased";
  }
  return "unknown";
}

std::string GeometryEstimate::csv_header() {
  return "estimator,value,stderr,samples,direction,seed,wall_time";
}

std::string GeometryEstimate::csv_row(bool include_wall_time) const {
  std::ostringstream os;
  os << name << ',' << format_double(value) << ',' << format_double(standard_error) << ','
     << samples << ',' << to_string(direction) << ',' << seed;
  if (include_wall_time)
    os << ',' << format_double(wall_time);
  return os.str();
}

std::pair<double, double> mean_and_stderr(const std::vector<double> &values, int batches) {
  const std::size_t n = values.size();
  if (n == 0)
    return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (n == 1)
    return {mean, 0.0};
  if (n < static_cast<std::size_t>(batches)) {
    double ss = 0.0;
    for (double v : values)
      ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1) / n)};
  }
  // Equal batches; a remainder is spread over the first batches.
  std::vector<double> means;
  std::size_t begin = 0;
  for (int b = 0; b < batches; ++b) {
    const std::size_t len = n / batches + (static_cast<std::size_t>(b) < n % batches ? 1 : 0);
    means.push_back(std::accumulate(values.begin() + begin, values.begin() + begin + len, 0.0) /
                    len);
    begin += len;
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / batches;
  double ss = 0.0;
  for (double m : means)
    ss += (m - grand) * (m - grand);
  return {mean, std::sqrt(ss / (batches - 1) / batches)};
}

std::optional<Matrix> FullSphere::sample(Rng &rng) const {
  return normalized(rng.gaussian_matrix(rows_, cols_));
}

std::optional<Matrix> FullSphere::project(const Matrix &v) const { return normalized(v); }

bool FullSphere::contains(const Matrix &x) const {
  return x.rows() == rows_ && x.cols() == cols_ && std::abs(x.norm() - 1.0) <= 1e-12;
}

SinglePoint::SinglePoint(const Matrix &x) {
  auto unit = normalized(x);
  if (!unit)
    throw std::invalid_argument("single-point set needs a nonzero matrix");
  x_ = *unit;
}

bool SinglePoint::contains(const Matrix &x) const {
  return x.rows() == x_.rows() && x.cols() == x_.cols() && (x - x_).norm() <= 1e-12;
}

SamplerMethod parse_sampler_method(const std::string &name) {
  if (name == "boundary-ray")
    return SamplerMethod::BoundaryRay;
  if (name == "rejection")
    return SamplerMethod::Rejection;
  throw std::invalid_argument("unknown sampler method '" + name + "'");
}

ConeSampler::ConeSampler(NormSpec spec, Matrix anchor, ConeSamplerOptions options)
    : spec_(spec), anchor_(std::move(anchor)), options_(options) {
  spec_.check_dims(anchor_.rows(), anchor_.cols());
  require_finite(anchor_, "cone anchor");
  if (anchor_.isZero(0.0))
    throw std::domain_error("descent cone at the zero matrix is the whole space; anchor must be nonzero");
  if (options_.budget < 1)
    throw std::invalid_argument("sampler budget must be positive");
  structure_ = subdifferential_structure(spec_, anchor_);
  anchor_norm_ = norm_value(spec_, anchor_);
}

bool ConeSampler::within(const Matrix &point) const {
  return norm_value(spec_, point) <= anchor_norm_ * (1.0 + kMembershipSlack);
}

double ConeSampler::boundary_step(const Matrix &unit) const {
  const double hi = 2.0 * anchor_norm_;
  if (within(anchor_ + hi * unit))
    return hi;
  double log_hi = std::log(hi);
  double log_lo = std::log(kMinWitness * anchor_.norm());
  if (!within(anchor_ + std::exp(log_lo) * unit))
    return 0.0;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (log_lo + log_hi);
    (within(anchor_ + std::exp(mid) * unit) ? log_lo : log_hi) = mid;
  }
  return std::exp(log_lo);
}

std::optional<ConeSampler::Emission> ConeSampler::certify(const Matrix &v, double hint) const {
  if (v.rows() != anchor_.rows() || v.cols() != anchor_.cols())
    throw std::invalid_argument("direction shape does not match the cone anchor");
  auto unit = normalized(v);
  if (!unit)
    return std::nullopt;
  if (hint > 0.0) {
    const double floor = kMinWitness * anchor_.norm();
    for (double t : {hint, hint * 1e-2, hint * 1e-4})
      if (t >= floor && within(anchor_ + t * *unit))
        return Emission{*unit, t};
  }
  const double t = boundary_step(*unit);
  if (t > 0.0)
    return Emission{*unit, t};
  return std::nullopt;
}

Matrix ConeSampler::retract(const Matrix &d, double eps) const {
  const double dn = d.norm();
  if (!(dn > 0.0))
    return Matrix::Zero(anchor_.rows(), anchor_.cols());
  Matrix y = anchor_ + (eps * anchor_.norm() / dn) * d;
  const double ry = norm_value(spec_, y);
  if (ry > anchor_norm_)
    y *= anchor_norm_ / ry;
  return y - anchor_;
}

std::optional<ConeSampler::Emission> ConeSampler::boundary_ray_draw(Rng &rng) const {
  for (int attempt = 0; attempt < options_.budget; ++attempt) {
    const Matrix d = rng.gaussian_matrix(anchor_.rows(), anchor_.cols());
    const double eps = std::exp(rng.uniform(std::log(1e-4), 0.0));
    if (auto e = certify(retract(d, eps)))
      return e;
  }
  return std::nullopt;
}

std::optional<ConeSampler::Emission> ConeSampler::rejection_draw(Rng &rng) const {
  const double eps = 1e-6 * anchor_.norm();
  for (int attempt = 0; attempt < options_.budget; ++attempt) {
    Matrix d = rng.gaussian_matrix(anchor_.rows(), anchor_.cols());
    d /= d.norm();
    if (norm_value(spec_, anchor_ + eps * d) <= anchor_norm_)
      if (auto e = certify(d, eps))
        return e;
  }
  return std::nullopt;
}

std::optional<ConeSampler::Emission> ConeSampler::flat_draw(Rng &rng) const {
  const double sigma1 = structure_.svd.sigma(0);
  const double spread = std::sqrt(static_cast<double>(anchor_.rows())) +
                        std::sqrt(static_cast<double>(anchor_.cols()));
  for (int attempt = 0; attempt < options_.budget; ++attempt) {
    const double tau = rng.uniform() * sigma1 / spread;
    const Matrix m = -anchor_ + tau * rng.gaussian_matrix(anchor_.rows(), anchor_.cols());
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector a = svd.matrixU().col(0).unaryExpr([](double x) { return x < 0.0 ? -1.0 : 1.0; });
    const Vector b = svd.matrixV().col(0).unaryExpr([](double x) { return x < 0.0 ? -1.0 : 1.0; });
    if (auto e = certify(a * b.transpose(), 1e-3 * anchor_.norm()))
      return e;
  }
  return std::nullopt;
}

std::optional<ConeSampler::Emission> ConeSampler::draw(Rng &rng) const {
  if (options_.flat_proposals && rng.uniform() < 0.5)
    if (auto e = flat_draw(rng))
      return e;
  return options_.method == SamplerMethod::BoundaryRay ? boundary_ray_draw(rng)
                                                       : rejection_draw(rng);
}

std::optional<Matrix> ConeSampler::sample(Rng &rng) const {
  if (auto e = draw(rng))
    return std::move(e->direction);
  return std::nullopt;
}

std::optional<Matrix> ConeSampler::project(const Matrix &v) const {
  std::optional<Emission> e;
  if (options_.exact_projection)
    e = certify(tangent_projection(v), 1e-4 * anchor_.norm());
  else
    e = certify(retract(v, 1e-4), 1e-4 * anchor_.norm());
  if (e)
    return std::move(e->direction);
  return std::nullopt;
}

bool ConeSampler::contains(const Matrix &x) const {
  if (x.rows() != anchor_.rows() || x.cols() != anchor_.cols())
    return false;
  if (std::abs(x.norm() - 1.0) > 1e-12)
    return false;
  return boundary_step(x) > 0.0;
}

Matrix ConeSampler::normal_projection(const Matrix &v) const {
  const Svd &svd = structure_.svd;
  const int s = structure_.rank;
  const Vector &w = structure_.fixed;
  const double rho = structure_.free_scale;
  const Matrix b = svd.u.transpose() * v * svd.v;
  const Vector a = b.diagonal().head(s);
  const Eigen::Index r22 = b.rows() - s, c22 = b.cols() - s;

  Vector sig;
  Matrix u22, v22;
  if (rho > 0.0 && r22 > 0 && c22 > 0) {
    Eigen::BDCSVD<Matrix> inner(b.bottomRightCorner(r22, c22),
                                Eigen::ComputeThinU | Eigen::ComputeThinV);
    sig = inner.singularValues();
    u22 = inner.matrixU();
    v22 = inner.matrixV();
  }

  // f(tau) = ||a - tau w||^2 + sum_j (sig_j - tau rho)_+^2 is convex and
  // piecewise quadratic; its minimizer over tau >= 0 is the stationary point
  // of one segment (or 0).
  auto f = [&](double tau) {
    double val = (a - tau * w).squaredNorm();
    for (Eigen::Index j = 0; j < sig.size(); ++j)
      val += std::pow(std::max(0.0, sig(j) - tau * rho), 2);
    return val;
  };
  const double aw = a.dot(w), ww = w.squaredNorm();
  double best_tau = 0.0, best_val = f(0.0);
  double partial = 0.0;
  for (Eigen::Index j = 0; j <= sig.size(); ++j) {
    const double denom = ww + rho * rho * static_cast<double>(j);
    if (denom > 0.0) {
      const double tau = std::max(0.0, (aw + rho * partial) / denom);
      const double val = f(tau);
      if (val < best_val) {
        best_val = val;
        best_tau = tau;
      }
    }
    if (j < sig.size())
      partial += sig(j);
  }

  Matrix m = Matrix::Zero(b.rows(), b.cols());
  for (int i = 0; i < s; ++i)
    m(i, i) = best_tau * w(i);
  if (sig.size() > 0) {
    const Vector capped = sig.cwiseMin(best_tau * rho);
    m.bottomRightCorner(r22, c22) = u22 * capped.asDiagonal() * v22.transpose();
  }
  return svd.u * m * svd.v.transpose();
}

double ConeSampler::directional_derivative(const Matrix &d) const {
  const Svd &svd = structure_.svd;
  const int s = structure_.rank;
  const Matrix b = svd.u.transpose() * d * svd.v;
  double value = b.diagonal().head(s).dot(structure_.fixed);
  const Eigen::Index r22 = b.rows() - s, c22 = b.cols() - s;
  if (structure_.free_scale > 0.0 && r22 > 0 && c22 > 0)
    value += structure_.free_scale *
             Eigen::BDCSVD<Matrix>(b.bottomRightCorner(r22, c22)).singularValues().sum();
  return value;
}

Matrix ConeSampler::tangent_projection(const Matrix &v) const { return v - normal_projection(v); }

double ConeSampler::closed_choice_distance(const Matrix &v) const {
  const Svd &svd = structure_.svd;
  const int s = structure_.rank;
  const Vector &w = structure_.fixed;
  const double rho = structure_.free_scale;
  if (!(rho > 0.0))
    throw std::invalid_argument("closed choice needs a norm with a free subdifferential block");
  const Matrix b = svd.u.transpose() * v * svd.v;
  const Vector a = b.diagonal().head(s);
  const Eigen::Index r22 = b.rows() - s, c22 = b.cols() - s;
  double op = 0.0;
  if (r22 > 0 && c22 > 0)
    op = Eigen::BDCSVD<Matrix>(b.bottomRightCorner(r22, c22)).singularValues()(0);
  // Scale t = ||P_{T-perp} v||_op on the free block cancels it exactly.
  const double tau = op / rho;
  const double rest = b.squaredNorm() - a.squaredNorm() -
                      (r22 > 0 && c22 > 0 ? b.bottomRightCorner(r22, c22).squaredNorm() : 0.0);
  return std::sqrt(std::max(0.0, rest + (a - tau * w).squaredNorm()));
}

std::vector<Matrix> draw_pool(const DirectionSet &set, int count, std::uint64_t seed) {
  std::vector<Matrix> pool;
  Rng rng(seed, kPoolStream);
  for (int attempt = 0; attempt < 4 * count && static_cast<int>(pool.size()) < count; ++attempt)
    if (auto x = set.sample(rng))
      pool.push_back(std::move(*x));
  return pool;
}

namespace {

template <class Objective, class Gradient>
Matrix ascend(const DirectionSet &set, Matrix start, double start_val, int steps,
              Objective &&objective, Gradient &&gradient) {
  Matrix best = start;
  double best_val = start_val;
  Matrix x = std::move(start);
  for (int k = 0; k < steps; ++k) {
    const Matrix g = gradient(x);
    const double gn = g.norm();
    if (!(gn > 0.0))
      break;
    auto next = set.project(x + g / gn);
    if (!next)
      break;
    const double moved = (*next - x).norm();
    const double val = objective(*next);
    if (val > best_val) {
      best_val = val;
      best = *next;
    }
    x = std::move(*next);
    if (moved < 1e-12)
      break;
  }
  return best;
}

} // namespace

Matrix maximize_linear(const DirectionSet &set, const Matrix &g, const std::vector<Matrix> &pool,
                       int ascent) {
  std::optional<Matrix> best;
  double best_val = -std::numeric_limits<double>::infinity();
  auto consider = [&](const Matrix &x) {
    const double val = frobenius_inner(x, g);
    if (val > best_val) {
      best_val = val;
      best = x;
    }
  };
  for (const Matrix &x : pool)
    consider(x);
  if (auto p = set.project(g))
    consider(*p);
  if (!best)
    throw std::runtime_error("direction set produced no member to maximize over");
  return ascend(
      set, *best, best_val, ascent, [&](const Matrix &x) { return frobenius_inner(x, g); },
      [&](const Matrix &) { return g; });
}

GeometryEstimate gaussian_width_lower(const DirectionSet &set, const McOptions &options) {
  const auto start = Clock::now();
  if (options.samples < 30)
    throw std::invalid_argument("width estimate needs at least 30 Gaussian draws");
  const std::vector<Matrix> pool = draw_pool(set, options.pool, options.seed);
  std::vector<double> draws(static_cast<std::size_t>(options.samples));
  parallel_for(draws.size(), options.threads, [&](std::size_t i) {
    Rng rng(options.seed, i);
    const Matrix g = rng.gaussian_matrix(set.rows(), set.cols());
    draws[i] = frobenius_inner(maximize_linear(set, g, pool, options.ascent), g);
  });
  return finish("gaussian_width_lower", std::move(draws), EstimateDirection::LowerBound,
                options.seed, start);
}

GeometryEstimate gaussian_width_upper_polar(const NormSpec &spec, const Matrix &anchor,
                                            const McOptions &options) {
  const auto start = Clock::now();
  const ConeSampler cone(spec, anchor);
  std::vector<double> draws(static_cast<std::size_t>(options.samples));
  parallel_for(draws.size(), options.threads, [&](std::size_t i) {
    Rng rng(options.seed, i);
    const Matrix g = rng.gaussian_matrix(anchor.rows(), anchor.cols());
    draws[i] = cone.tangent_projection(g).norm();
  });
  return finish("gaussian_width_upper_polar", std::move(draws), EstimateDirection::UpperBound,
                options.seed, start);
}

GeometryEstimate gaussian_width_upper_closed(const NormSpec &spec, const Matrix &anchor,
                                             const McOptions &options) {
  const auto start = Clock::now();
  const ConeSampler cone(spec, anchor);
  std::vector<double> draws(static_cast<std::size_t>(options.samples));
  parallel_for(draws.size(), options.threads, [&](std::size_t i) {
    Rng rng(options.seed, i);
    const Matrix g = rng.gaussian_matrix(anchor.rows(), anchor.cols());
    draws[i] = cone.closed_choice_distance(g);
  });
  return finish("gaussian_width_upper_closed", std::move(draws), EstimateDirection::UpperBound,
                options.seed, start);
}

WidthBound ksupport_width_bound(const Vector &sigma, int k, int dbar) {
  if (dbar < 1)
    throw std::invalid_argument("dbar must be positive");
  if (k < 1 || k > dbar)
    throw std::invalid_argument("k must lie in [1, dbar]");
  if (sigma.size() > dbar)
    throw std::invalid_argument("spectrum longer than dbar");
  Vector full = Vector::Zero(dbar);
  full.head(sigma.size()) = sigma;
  const KSupportDecomposition dec = find_kr_threshold(full, k);
  WidthBound out;
  out.r = dec.r;
  out.rank = dec.rank;
  const double s = dec.rank;
  const double room = 2.0 * dbar - s;
  const double head_sq = full.head(dec.head_size()).squaredNorm();
  const double averaged = full.segment(dec.averaged_begin(), dec.averaged_size()).sum();
  double ratio = 0.0;
  if (averaged > 0.0)
    ratio = (dec.r + 1.0) * (dec.r + 1.0) * head_sq / (averaged * averaged);
  else
    out.empty_averaged_block = true;
  out.value = s * room + (ratio + dec.averaged_size()) * room;
  return out;
}

GeometryEstimate partial_complexity(const DirectionSet &set, const OmegaLaw &law,
                                    NoiseKind noise, const McOptions &options) {
  const auto start = Clock::now();
  if (law.rows != set.rows() || law.cols != set.cols())
    throw std::invalid_argument("observation law shape does not match the direction set");
  if (!law.full && law.m < 1)
    throw std::invalid_argument("partial complexity needs m >= 1");
  const std::vector<Matrix> pool = draw_pool(set, options.pool, options.seed);
  std::vector<double> draws(static_cast<std::size_t>(options.samples));
  parallel_for(draws.size(), options.threads, [&](std::size_t i) {
    const ObservationSet omega = law.full
                                     ? full_observation(law.rows, law.cols)
                                     : sample_omega(law.rows, law.cols, law.m,
                                                    derive_seed(options.seed, 2 * i));
    const Vector eta = draw_noise(noise, omega.size(), options.seed, 2 * i + 1);
    const Matrix z = adjoint_omega(eta, omega);
    draws[i] = z.isZero(0.0) ? 0.0
                             : 2.0 * frobenius_inner(maximize_linear(set, z, pool, options.ascent), z);
  });
  return finish("partial_complexity", std::move(draws), EstimateDirection::LowerBound,
                options.seed, start);
}

GeometryEstimate compatibility_constant(const DirectionSet &set, const NormSpec &spec,
                                        const McOptions &options) {
  const auto start = Clock::now();
  if (options.samples < 1)
    throw std::invalid_argument("compatibility estimate needs n >= 1");
  const std::vector<Matrix> pool = draw_pool(set, options.pool, options.seed);
  auto ratio = [&](const Matrix &x) { return norm_value(spec, x) / x.norm(); };
  auto grad = [&](const Matrix &x) { return subgradient(spec, x).w; };
  std::vector<double> draws(static_cast<std::size_t>(options.samples));
  parallel_for(draws.size(), options.threads, [&](std::size_t i) {
    Rng rng(options.seed, i);
    std::optional<Matrix> x0 = set.sample(rng);
    if (i == 0 || !x0) {
      for (const Matrix &p : pool)
        if (!x0 || ratio(p) > ratio(*x0))
          x0 = p;
    }
    if (!x0)
      throw std::runtime_error("direction set produced no member for the compatibility estimate");
    draws[i] = ratio(ascend(set, *x0, ratio(*x0), options.ascent, ratio, grad));
  });
  GeometryEstimate est = finish("compatibility_constant", std::move(draws),
                                EstimateDirection::LowerBound, options.seed, start);
  est.value = *std::max_element(est.draws.begin(), est.draws.end());
  return est;
}

namespace {

GeometryEstimate min_estimate(std::vector<double> values, std::uint64_t seed,
                              Clock::time_point start) {
  GeometryEstimate est;
  est.name = "rsc_kappa";
  est.direction = EstimateDirection::UpperBound;
  est.seed = seed;
  est.samples = static_cast<int>(values.size());
  est.value = *std::min_element(values.begin(), values.end());
  // Spread of per-batch minima as a rough error scale.
  const std::size_t batches = std::min<std::size_t>(10, values.size());
  std::vector<double> mins;
  for (std::size_t b = 0; b < batches; ++b) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = b; i < values.size(); i += batches)
      lo = std::min(lo, values[i]);
    mins.push_back(lo);
  }
  est.standard_error = mins.size() > 1 ? mean_and_stderr(mins, static_cast<int>(mins.size())).second : 0.0;
  est.draws = std::move(values);
  est.wall_time = seconds_since(start);
  return est;
}

} // namespace

GeometryEstimate rsc_verify(const ObservationSet &omega, const std::vector<Matrix> &directions,
                            double beta) {
  const auto start = Clock::now();
  if (omega.empty())
    throw std::invalid_argument("RSC check needs at least one observation");
  const SpikySlice slice{beta};
  const double scale = static_cast<double>(omega.rows()) * omega.cols() / omega.size();
  std::vector<double> values;
  for (const Matrix &x : directions) {
    if (x.rows() != omega.rows() || x.cols() != omega.cols())
      throw std::invalid_argument("direction shape does not match the observation set");
    if (!slice.contains(x))
      continue;
    values.push_back(scale * project_omega(x, omega).squaredNorm() / x.squaredNorm());
  }
  if (values.empty())
    throw std::runtime_error("no sampled direction has spikiness below beta = " +
                             format_double(beta));
  return min_estimate(std::move(values), 0, start);
}

GeometryEstimate rsc_verify(const ObservationSet &omega, const DirectionSet &set, double beta,
                            int n, std::uint64_t seed) {
  if (n < 1)
    throw std::invalid_argument("RSC check needs n >= 1");
  std::vector<Matrix> directions;
  for (int i = 0; i < n; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    if (auto x = set.sample(rng))
      directions.push_back(std::move(*x));
  }
  GeometryEstimate est = rsc_verify(omega, directions, beta);
  est.seed = seed;
  return est;
}

double beta_threshold(double m, double wg2, double d, double c0) {
  if (!(m > 0.0 && wg2 > 0.0 && d > 1.0 && c0 > 0.0))
    throw std::invalid_argument("beta threshold needs positive m, wG^2, c0 and d > 1");
  return std::pow(m / (c0 * c0 * wg2 * std::log(d)), 0.25);
}

double spiky_error_floor(double alpha_star, double c0, double wg2, double d, double m) {
  if (!(alpha_star > 0.0 && c0 > 0.0 && wg2 > 0.0 && d > 1.0 && m > 0.0))
    throw std::invalid_argument("error floor needs positive inputs and d > 1");
  return 4.0 * alpha_star * alpha_star * std::sqrt(c0 * c0 * wg2 * std::log(d) / m);
}

} // namespace smc
