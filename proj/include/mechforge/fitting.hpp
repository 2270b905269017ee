#pragma once

#include <span>

namespace mechforge {

struct GevParams {
  double location = 0.0;  // mu
  double scale = 1.0;     // sigma > 0
  double shape = 0.0;     // xi; 0 is the Gumbel case
};

struct GpdParams {
  double scale = 1.0;  // sigma > 0
  double shape = 0.0;  // xi; 0 is the exponential case; threshold fixed at 0
};

struct ExpParams {
  double rate = 1.0;  // lambda > 0
};

double gev_log_density(const GevParams& params, double x);
double gpd_log_density(const GpdParams& params, double x);
double exp_log_density(const ExpParams& params, double x);

double gev_log_likelihood(const GevParams& params, std::span<const double> samples);
double gpd_log_likelihood(const GpdParams& params, std::span<const double> samples);
double exp_log_likelihood(const ExpParams& params, std::span<const double> samples);

template <typename Params>
struct Fit {
  Params params;
  double log_likelihood = 0.0;
};

/// Maximum-likelihood GEV fit by multistart Nelder-Mead, seeded from moment
/// estimates, with the shape clamped to [-0.9, 0.9]. The result never scores
/// below the best Gumbel (shape = 0) fit. Throws std::invalid_argument on
/// fewer than 30 samples or a degenerate (constant) sample.
Fit<GevParams> fit_gev(std::span<const double> samples);

/// Maximum-likelihood GPD fit (threshold 0) over nonnegative samples; never
/// scores below the closed-form exponential fit it generalizes.
Fit<GpdParams> fit_gpd(std::span<const double> samples);

/// Closed form: rate = 1 / mean.
Fit<ExpParams> fit_exponential(std::span<const double> samples);

}  // namespace mechforge
