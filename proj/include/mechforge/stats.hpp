#pragma once

#include <Eigen/Dense>
#include <span>

namespace mechforge {

/// Regularized incomplete beta function I_x(a, b), continued-fraction
/// evaluation, absolute error below 1e-10 on [0,1].
double incomplete_beta(double a, double b, double x);

/// Two-sided p-value of Pearson's r at n samples, via the exact t-to-beta
/// identity p = I_{df/(df+t^2)}(df/2, 1/2) with df = n - 2.
double pearson_p_value(double r, int n);

struct Correlation {
  double r = 0.0;
  double p = 1.0;
};

/// Pearson correlation with two-sided p. Throws std::invalid_argument when
/// lengths differ, n < 3, or either side has zero variance.
Correlation pearson(std::span<const double> xs, std::span<const double> ys);

/// Linear-interpolation quantile of an unsorted sample (index p*(n-1)).
double quantile(std::span<const double> values, double p);

double mean(std::span<const double> values);

}  // namespace mechforge
