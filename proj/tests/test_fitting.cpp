#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mechforge/fitting.hpp"
#include "mechforge/rng.hpp"

using namespace mechforge;

namespace {

std::vector<double> sample_gumbel(double mu, double sigma, int n, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> xs;
  for (int k = 0; k < n; ++k) {
    double u = rng.next_double();
    while (u <= 0.0) u = rng.next_double();
    xs.push_back(mu - sigma * std::log(-std::log(u)));
  }
  return xs;
}

std::vector<double> sample_exponential(double rate, int n, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> xs;
  for (int k = 0; k < n; ++k) xs.push_back(-std::log1p(-rng.next_double()) / rate);
  return xs;
}

// Simpson quadrature of the fitted density over its support.
template <typename LogDensity>
double integrate(LogDensity density, double lo, double hi) {
  const int n = 20000;
  double h = (hi - lo) / n;
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    double a = lo + k * h, b = a + h, m = a + 0.5 * h;
    total += (h / 6.0) * (std::exp(density(a)) + 4.0 * std::exp(density(m)) + std::exp(density(b)));
  }
  return total;
}

}  // namespace

TEST_CASE("gev fit recovers a Gumbel within tolerance") {
  std::vector<double> xs = sample_gumbel(0.0, 1.0, 10000, 21);
  Fit<GevParams> fit = fit_gev(xs);
  CHECK(std::abs(fit.params.shape) < 0.05);
  CHECK(fit.params.location == doctest::Approx(0.0).epsilon(0.1));
  CHECK(fit.params.scale == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("gev fit is location-scale equivariant") {
  std::vector<double> xs = sample_gumbel(0.0, 1.0, 5000, 22);
  Fit<GevParams> base = fit_gev(xs);
  const double a = 2.5, b = -1.0;
  std::vector<double> ys;
  for (double x : xs) ys.push_back(a * x + b);
  Fit<GevParams> scaled = fit_gev(ys);
  CHECK(scaled.params.location == doctest::Approx(a * base.params.location + b).epsilon(1e-2));
  CHECK(scaled.params.scale == doctest::Approx(a * base.params.scale).epsilon(1e-2));
  CHECK(std::abs(scaled.params.shape - base.params.shape) < 1e-2);
}

TEST_CASE("degenerate samples are rejected") {
  std::vector<double> flat(100, 3.0);
  CHECK_THROWS_AS(fit_gev(flat), std::invalid_argument);
  CHECK_THROWS_AS(fit_gpd(flat), std::invalid_argument);
  std::vector<double> few(10, 1.0);
  CHECK_THROWS_AS(fit_gev(few), std::invalid_argument);
  std::vector<double> negative = sample_exponential(1.0, 100, 5);
  negative[0] = -0.5;
  CHECK_THROWS_AS(fit_gpd(negative), std::invalid_argument);
  CHECK_THROWS_AS(fit_exponential(negative), std::invalid_argument);
}

TEST_CASE("gpd fit recovers an exponential within tolerance") {
  std::vector<double> xs = sample_exponential(2.0, 10000, 23);
  Fit<GpdParams> fit = fit_gpd(xs);
  CHECK(std::abs(fit.params.shape) < 0.05);
  CHECK(fit.params.scale == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("exponential closed form") {
  std::vector<double> xs(100, 0.25);
  xs[0] = 0.2500000001;  // avoid the degenerate-sample guard
  Fit<ExpParams> fit = fit_exponential(xs);
  CHECK(fit.params.rate == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("nesting inequalities hold on awkward samples") {
  // A bimodal pile: hard for the optimizer, but the nesting guarantees stand.
  std::vector<double> xs;
  for (double x : sample_exponential(0.5, 300, 31)) xs.push_back(x);
  for (double x : sample_exponential(5.0, 300, 32)) xs.push_back(x);
  Fit<GpdParams> gpd = fit_gpd(xs);
  Fit<ExpParams> exponential = fit_exponential(xs);
  CHECK(gpd.log_likelihood >= exponential.log_likelihood - 1e-6);

  std::vector<double> gev_samples = sample_gumbel(1.0, 2.0, 600, 33);
  Fit<GevParams> gev = fit_gev(gev_samples);
  GevParams gumbel{gev.params.location, gev.params.scale, 0.0};
  CHECK(gev.log_likelihood >= gev_log_likelihood(gumbel, gev_samples) - 1e-6);
}

TEST_CASE("fitted densities integrate to one") {
  std::vector<double> xs = sample_gumbel(0.5, 1.5, 2000, 41);
  Fit<GevParams> gev = fit_gev(xs);
  double lo = gev.params.location - 20.0 * gev.params.scale;
  double hi = gev.params.location + 60.0 * gev.params.scale;
  if (gev.params.shape > 1e-8) lo = gev.params.location - gev.params.scale / gev.params.shape;
  if (gev.params.shape < -1e-8) hi = gev.params.location - gev.params.scale / gev.params.shape;
  CHECK(integrate([&](double x) { return gev_log_density(gev.params, x); }, lo, hi) ==
        doctest::Approx(1.0).epsilon(1e-4));

  std::vector<double> ys = sample_exponential(1.5, 2000, 42);
  Fit<GpdParams> gpd = fit_gpd(ys);
  double support_hi = gpd.params.shape < -1e-8 ? -gpd.params.scale / gpd.params.shape
                                               : gpd.params.scale * 200.0;
  CHECK(integrate([&](double x) { return gpd_log_density(gpd.params, x); }, 0.0, support_hi) ==
        doctest::Approx(1.0).epsilon(1e-3));
}
