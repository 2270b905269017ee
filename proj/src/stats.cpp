#include "mechforge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mechforge {

namespace {

// Continued fraction for the incomplete beta, modified Lentz scheme.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                    b * std::log1p(-x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double pearson_p_value(double r, int n) {
  if (n < 3) throw std::invalid_argument("pearson_p_value: need n >= 3");
  double df = static_cast<double>(n - 2);
  double r2 = r * r;
  if (r2 >= 1.0) return 0.0;
  double t2 = r2 * df / (1.0 - r2);
  return incomplete_beta(0.5 * df, 0.5, df / (df + t2));
}

Correlation pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
  const auto n = static_cast<Eigen::Index>(xs.size());
  if (n < 3) throw std::invalid_argument("pearson: need n >= 3");
  Eigen::Map<const Eigen::VectorXd> x(xs.data(), n), y(ys.data(), n);
  Eigen::VectorXd cx = x.array() - x.mean();
  Eigen::VectorXd cy = y.array() - y.mean();
  double sxx = cx.squaredNorm(), syy = cy.squaredNorm();
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson: zero variance");
  Correlation out;
  out.r = cx.dot(cy) / std::sqrt(sxx * syy);
  out.p = pearson_p_value(out.r, static_cast<int>(n));
  return out;
}

double quantile(std::span<const double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  p = std::clamp(p, 0.0, 1.0);
  double pos = p * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean: empty sample");
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()))
      .mean();
}

}  // namespace mechforge
