#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "mechforge/deviation.hpp"

using namespace mechforge;
using namespace mechforge::testing;

TEST_CASE("default rho grid excludes zero and ends at one") {
  Eigen::VectorXd grid = default_rho_grid();
  CHECK(grid[0] == doctest::Approx(0.025));
  CHECK(grid[grid.size() - 1] == doctest::Approx(1.0));
  for (Eigen::Index j = 0; j + 1 < grid.size(); ++j) CHECK(grid[j] < grid[j + 1]);
}

TEST_CASE("fixture no-discount deviation at rho 0.7") {
  Instance fx = fixture_a();
  Eigen::VectorXd grid(2);
  grid << 0.7, 1.0;
  DeviationCurve curve = unilateral_curve(fx, 1, Rule::NoDiscount, grid);
  // reports 7, trades, pays 7: profit (10-7)/6
  CHECK(curve.profit[0] == doctest::Approx(0.5).epsilon(1e-12));
  // truthful report pays 10: zero profit
  CHECK(curve.profit[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("vcg curve peaks at truth where it equals one") {
  Instance fx = fixture_a();
  DeviationCurve curve = unilateral_curve(fx, 1, Rule::Vcg, default_rho_grid());
  double at_truth = curve.profit[curve.profit.size() - 1];
  CHECK(at_truth == doctest::Approx(1.0).epsilon(1e-12));
  for (Eigen::Index r = 0; r < curve.profit.size(); ++r) {
    CHECK(curve.profit[r] <= at_truth + 1e-12);
  }
}

TEST_CASE("capped rules land in the unit interval at truth") {
  Instance fx = fixture_a();
  Eigen::VectorXd grid(1);
  grid << 1.0;
  for (Rule rule : kCappedFullAllocationRules) {
    DeviationCurve curve = unilateral_curve(fx, 1, rule, grid);
    CHECK(curve.profit[0] >= -1e-12);
    CHECK(curve.profit[0] <= 1.0 + 1e-12);
  }
}

TEST_CASE("inactive agents are rejected") {
  Instance fx = fixture_a();
  CHECK_THROWS_AS(unilateral_curve(fx, 2, Rule::Vcg, default_rho_grid()),
                  std::invalid_argument);
}

TEST_CASE("seller deviations map rho onto reserve inflation") {
  Instance fx = fixture_a();
  Eigen::VectorXd grid(2);
  grid << 0.5, 1.0;
  // At rho = 0.5 the seller reports reserve -6; the trade survives and under
  // no discount it is paid its report: profit = -4 - (-6) = 2, over Delta 6.
  DeviationCurve curve = unilateral_curve(fx, 0, Rule::NoDiscount, grid);
  CHECK(curve.profit[0] == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
  CHECK(curve.profit[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("expected curves partition into gain and loss cells") {
  GeneratorConfig config;
  config.scenario = Scenario::Super;
  config.n_goods = 4;
  config.n_sellers = 2;
  config.n_buyers = 2;
  Eigen::VectorXd grid(5);
  grid << 0.2, 0.4, 0.6, 0.8, 1.0;
  ExpectedCurves curves = expected_curves(config, Rule::Threshold, grid, 120, 31);
  CHECK(curves.n_pairs > 0);
  for (Eigen::Index r = 0; r < grid.size(); ++r) {
    double expected = curves.expected.profit[r];
    double gain = curves.conditional_gain.profit[r];
    double loss = curves.conditional_loss.profit[r];
    if (std::isnan(gain)) {
      CHECK(expected == doctest::Approx(loss).epsilon(1e-9));
    } else if (std::isnan(loss)) {
      CHECK(expected == doctest::Approx(gain).epsilon(1e-9));
    } else {
      CHECK(expected <= std::max(gain, loss) + 1e-9);
      CHECK(expected >= std::min(gain, loss) - 1e-9);
    }
    // A lost trade forfeits everything: zero payoff, zero payment.
    if (!std::isnan(loss)) CHECK(loss == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("small's expected gain peaks with less shaving than threshold's") {
  GeneratorConfig config;
  config.scenario = Scenario::Super;
  Eigen::VectorXd grid = default_rho_grid();
  auto argmax_rho = [&](Rule rule) {
    ExpectedCurves curves = expected_curves(config, rule, grid, 200, 11);
    double best_rho = grid[0], best = -1e300;
    for (Eigen::Index r = 0; r < grid.size(); ++r) {
      double v = curves.expected.profit[r];
      if (!std::isnan(v) && v > best) {
        best = v;
        best_rho = grid[r];
      }
    }
    return best_rho;
  };
  CHECK(argmax_rho(Rule::Small) >= argmax_rho(Rule::Threshold));
}

TEST_CASE("vcg expected curve is maximal at truth") {
  GeneratorConfig config;
  config.scenario = Scenario::Decay;
  config.n_goods = 4;
  config.n_sellers = 2;
  config.n_buyers = 2;
  Eigen::VectorXd grid(4);
  grid << 0.25, 0.5, 0.75, 1.0;
  ExpectedCurves curves = expected_curves(config, Rule::Vcg, grid, 150, 37);
  double at_truth = curves.expected.profit[3];
  for (Eigen::Index r = 0; r < 4; ++r) {
    if (!std::isnan(curves.expected.profit[r])) {
      CHECK(curves.expected.profit[r] <= at_truth + 1e-9);
    }
  }
}
