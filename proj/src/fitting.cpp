#include "mechforge/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mechforge/optimize.hpp"
#include "mechforge/rng.hpp"
#include "mechforge/stats.hpp"

namespace mechforge {

namespace {

constexpr double kInfeasible = 1e100;
constexpr double kShapeLimit = 0.9;
constexpr double kShapeZero = 1e-8;  // below this the limiting form applies
constexpr int kRestarts = 5;

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

Moments moments_of(std::span<const double> samples) {
  Moments m;
  m.mean = mean(samples);
  double ss = 0.0;
  for (double x : samples) ss += (x - m.mean) * (x - m.mean);
  m.sd = std::sqrt(ss / static_cast<double>(samples.size() - 1));
  return m;
}

void require_samples(std::span<const double> samples, bool nonnegative) {
  if (samples.size() < 30) throw std::invalid_argument("fit: need at least 30 samples");
  double lo = samples[0], hi = samples[0];
  for (double x : samples) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (nonnegative && lo < 0.0) throw std::invalid_argument("fit: negative sample");
  if (hi == lo) throw std::invalid_argument("fit: degenerate (constant) sample");
}

}  // namespace

double gev_log_density(const GevParams& params, double x) {
  if (params.scale <= 0.0) return -kInfeasible;
  double z = (x - params.location) / params.scale;
  double log_scale = std::log(params.scale);
  if (std::abs(params.shape) < kShapeZero) {
    return -log_scale - z - std::exp(-z);
  }
  double t = 1.0 + params.shape * z;
  if (t <= 0.0) return -kInfeasible;
  return -log_scale - (1.0 + 1.0 / params.shape) * std::log(t) -
         std::pow(t, -1.0 / params.shape);
}

double gpd_log_density(const GpdParams& params, double x) {
  if (params.scale <= 0.0 || x < 0.0) return -kInfeasible;
  double log_scale = std::log(params.scale);
  if (std::abs(params.shape) < kShapeZero) {
    return -log_scale - x / params.scale;
  }
  double t = 1.0 + params.shape * x / params.scale;
  if (t <= 0.0) return -kInfeasible;
  return -log_scale - (1.0 + 1.0 / params.shape) * std::log(t);
}

double exp_log_density(const ExpParams& params, double x) {
  if (params.rate <= 0.0 || x < 0.0) return -kInfeasible;
  return std::log(params.rate) - params.rate * x;
}

namespace {

template <typename Params, typename LogDensity>
double log_likelihood(const Params& params, std::span<const double> samples, LogDensity density) {
  double total = 0.0;
  for (double x : samples) {
    double d = density(params, x);
    if (d <= -kInfeasible) return -kInfeasible;
    total += d;
  }
  return total;
}

}  // namespace

double gev_log_likelihood(const GevParams& params, std::span<const double> samples) {
  return log_likelihood(params, samples, gev_log_density);
}

double gpd_log_likelihood(const GpdParams& params, std::span<const double> samples) {
  return log_likelihood(params, samples, gpd_log_density);
}

double exp_log_likelihood(const ExpParams& params, std::span<const double> samples) {
  return log_likelihood(params, samples, exp_log_density);
}

Fit<GevParams> fit_gev(std::span<const double> samples) {
  require_samples(samples, /*nonnegative=*/false);
  Moments m = moments_of(samples);
  // Gumbel moment estimates seed every restart.
  double scale0 = m.sd * std::numbers::sqrt3 * std::numbers::inv_pi * std::sqrt(2.0);
  double loc0 = m.mean - 0.5772156649015329 * scale0;

  auto objective = [&](const Eigen::VectorXd& v) {
    GevParams p{v[0], std::exp(v[1]), v[2]};
    if (std::abs(p.shape) > kShapeLimit) return kInfeasible;
    return -gev_log_likelihood(p, samples);
  };

  // Gumbel fallback over (location, log scale) with shape pinned to zero.
  auto gumbel_objective = [&](const Eigen::VectorXd& v) {
    GevParams p{v[0], std::exp(v[1]), 0.0};
    return -gev_log_likelihood(p, samples);
  };
  Eigen::VectorXd gumbel_start(2);
  gumbel_start << loc0, std::log(scale0);
  SimplexResult gumbel =
      nelder_mead(gumbel_objective, gumbel_start, Eigen::Vector2d(0.1 * scale0, 0.2));

  RngStream rng = RngStream(0x6E5F17ULL).derive("fit/gev");
  SimplexResult best;
  best.value = kInfeasible;
  for (int r = 0; r < kRestarts; ++r) {
    Eigen::VectorXd start(3);
    start << loc0 + (r == 0 ? 0.0 : rng.next_double(-0.5, 0.5) * scale0),
        std::log(scale0) + (r == 0 ? 0.0 : rng.next_double(-0.5, 0.5)),
        r == 0 ? 0.1 : rng.next_double(-0.5, 0.5);
    SimplexResult result =
        nelder_mead(objective, start, Eigen::Vector3d(0.1 * scale0, 0.2, 0.1));
    if (result.value < best.value) best = result;
  }

  if (gumbel.value <= best.value) {
    return {GevParams{gumbel.x[0], std::exp(gumbel.x[1]), 0.0}, -gumbel.value};
  }
  return {GevParams{best.x[0], std::exp(best.x[1]), best.x[2]}, -best.value};
}

Fit<GpdParams> fit_gpd(std::span<const double> samples) {
  require_samples(samples, /*nonnegative=*/true);
  Moments m = moments_of(samples);
  double cv2 = (m.sd * m.sd) / (m.mean * m.mean);
  double shape0 = std::clamp(0.5 * (1.0 - 1.0 / cv2), -0.5, 0.5);
  double scale0 = std::max(m.mean * (1.0 - shape0), 1e-12);

  auto objective = [&](const Eigen::VectorXd& v) {
    GpdParams p{std::exp(v[0]), v[1]};
    if (std::abs(p.shape) > kShapeLimit) return kInfeasible;
    return -gpd_log_likelihood(p, samples);
  };

  RngStream rng = RngStream(0x6E5F17ULL).derive("fit/gpd");
  SimplexResult best;
  best.value = kInfeasible;
  for (int r = 0; r < kRestarts; ++r) {
    Eigen::VectorXd start(2);
    start << std::log(scale0) + (r == 0 ? 0.0 : rng.next_double(-0.5, 0.5)),
        r == 0 ? shape0 : rng.next_double(-0.5, 0.5);
    SimplexResult result = nelder_mead(objective, start, Eigen::Vector2d(0.2, 0.1));
    if (result.value < best.value) best = result;
  }

  Fit<ExpParams> exponential = fit_exponential(samples);
  if (-best.value < exponential.log_likelihood) {
    return {GpdParams{1.0 / exponential.params.rate, 0.0}, exponential.log_likelihood};
  }
  return {GpdParams{std::exp(best.x[0]), best.x[1]}, -best.value};
}

Fit<ExpParams> fit_exponential(std::span<const double> samples) {
  require_samples(samples, /*nonnegative=*/true);
  ExpParams params{1.0 / mean(samples)};
  return {params, exp_log_likelihood(params, samples)};
}

}  // namespace mechforge
