#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "mechforge/equilibrium.hpp"
#include "mechforge/winner.hpp"

using namespace mechforge;
using namespace mechforge::testing;

TEST_CASE("apply_shave scales by role") {
  Instance fx = fixture_a();
  XorValuation same = apply_shave(fx.agents[1].valuation, 0.0);
  CHECK(same.atoms[0].value == 10.0);
  XorValuation buyer = apply_shave(fx.agents[1].valuation, 0.3);
  CHECK(buyer.atoms[0].value == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(buyer.atoms[0].trade == fx.agents[1].valuation.atoms[0].trade);
  XorValuation seller = apply_shave(fx.agents[0].valuation, 0.5);
  CHECK(seller.atoms[0].value == doctest::Approx(-6.0).epsilon(1e-12));
}

TEST_CASE("class reference boundaries") {
  GeneratorConfig config;
  config.scenario = Scenario::Super;
  CHECK(build_class_reference(config, 300, 1, 7).empty());
  auto b3 = build_class_reference(config, 300, 3, 7);
  REQUIRE(b3.size() == 2);
  CHECK(b3[0] <= b3[1]);
  CHECK(b3 == build_class_reference(config, 300, 3, 7));  // deterministic
  CHECK_THROWS_AS(build_class_reference(config, 300, 4, 7), std::invalid_argument);
  CHECK_THROWS_AS(build_class_reference(config, 100, 3, 7), std::invalid_argument);
}

TEST_CASE("classification respects boundaries with ties going down") {
  Instance fx = fixture_a();
  const XorValuation& v = fx.agents[1].valuation;  // single atom of value 10
  CHECK(valuation_statistic(v) == 10.0);
  CHECK(classify_agent(v, std::vector<double>{}) == 0);
  CHECK(classify_agent(v, std::vector<double>{15.0}) == 0);
  CHECK(classify_agent(v, std::vector<double>{10.0}) == 0);  // tie -> lower
  CHECK(classify_agent(v, std::vector<double>{5.0}) == 1);
  CHECK(classify_agent(v, std::vector<double>{5.0, 9.0}) == 2);
}

TEST_CASE("best response under VCG is the smallest grid point") {
  Instance fx = fixture_a();
  ShaveProfile truthful;
  truthful.alpha = Eigen::VectorXd::Zero(1);
  std::vector<double> grid;
  for (int j = 0; j < 10; ++j) grid.push_back(0.1 * j);
  for (int agent = 0; agent < 3; ++agent) {
    CHECK(best_response_alpha(fx, agent, truthful, Rule::Vcg, grid) == 0.0);
  }
}

TEST_CASE("fixture best response under no discount is half") {
  Instance fx = fixture_a();
  ShaveProfile truthful;
  truthful.alpha = Eigen::VectorXd::Zero(1);
  std::vector<double> grid;
  for (int j = 0; j < 10; ++j) grid.push_back(0.1 * j);
  // u(alpha) = 10 alpha while the trade survives (alpha < 0.6), else 0.
  CHECK(best_response_alpha(fx, 1, truthful, Rule::NoDiscount, grid) == doctest::Approx(0.5));
}

TEST_CASE("agent that never trades best-responds with the tie rule") {
  Instance fx = fixture_a();
  // b2 never trades: shrink its value so no profile includes it.
  fx.agents[2].valuation.atoms[0].value = 0.001;
  ShaveProfile truthful;
  truthful.alpha = Eigen::VectorXd::Zero(1);
  std::vector<double> grid{0.0, 0.3, 0.6};
  CHECK(best_response_alpha(fx, 2, truthful, Rule::Equal, grid) == 0.0);
}

TEST_CASE("vcg equilibrium converges immediately to zero shave") {
  GeneratorConfig config;
  config.scenario = Scenario::Decay;
  IterationParams params;
  params.instances_per_iteration = 20;
  params.max_iterations = 5;
  EquilibriumResult result = iterate_equilibrium(config, Rule::Vcg, 1, params, 17);
  CHECK(result.converged);
  CHECK(result.profile.alpha[0] == 0.0);
  CHECK(result.trace.size() == 1);
}

TEST_CASE("damped update follows the trace identity") {
  GeneratorConfig config;
  config.scenario = Scenario::Super;
  config.n_goods = 4;
  config.n_sellers = 2;
  config.n_buyers = 2;
  IterationParams params;
  params.instances_per_iteration = 12;
  params.max_iterations = 4;
  EquilibriumResult result = iterate_equilibrium(config, Rule::NoDiscount, 1, params, 3);
  REQUIRE(result.trace.size() >= 2);
  for (std::size_t t = 0; t + 1 < result.trace.size(); ++t) {
    Eigen::VectorXd expected =
        params.theta * result.trace[t].alpha_hat + (1.0 - params.theta) * result.trace[t].alpha_bar;
    CHECK((result.trace[t + 1].alpha_hat - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  // 0.5-damped update: alpha_hat 0.4, alpha_bar 0.2 -> 0.3
  Eigen::VectorXd hat = Eigen::VectorXd::Constant(1, 0.4);
  Eigen::VectorXd bar = Eigen::VectorXd::Constant(1, 0.2);
  CHECK((0.5 * hat + 0.5 * bar)[0] == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("three-class iteration yields per-class factors") {
  GeneratorConfig config;
  config.scenario = Scenario::Super;
  config.n_goods = 4;
  config.n_sellers = 2;
  config.n_buyers = 2;
  IterationParams params;
  params.instances_per_iteration = 10;
  params.max_iterations = 3;
  EquilibriumResult result = iterate_equilibrium(config, Rule::Threshold, 3, params, 19);
  REQUIRE(result.profile.alpha.size() == 3);
  REQUIRE(result.profile.boundaries.size() == 2);
  for (int k = 0; k < 3; ++k) {
    CHECK(result.profile.alpha[k] >= 0.0);
    CHECK(result.profile.alpha[k] <= 1.0);
  }
  CHECK(result.mean_shave() == doctest::Approx(result.profile.alpha.mean()));
}

TEST_CASE("measuring the truthful profile gives full efficiency") {
  GeneratorConfig config;
  config.scenario = Scenario::Uniform;
  ShaveProfile truthful;
  truthful.alpha = Eigen::VectorXd::Zero(1);
  EquilibriumMeasure m = measure_equilibrium(config, truthful, 50, 23);
  CHECK(m.mean_shave_pct == 0.0);
  CHECK(m.efficiency_pct == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(m.n_used > 0);
}

TEST_CASE("heavy shaving destroys the fixture trade entirely") {
  Instance fx = fixture_a();
  ShaveProfile heavy;
  heavy.alpha = Eigen::VectorXd::Constant(1, 0.7);
  std::vector<XorValuation> bids = shaved_reports(fx, heavy);
  CHECK(bids[1].atoms[0].value == doctest::Approx(3.0).epsilon(1e-12));
  auto [profile, surplus] = efficient_trade(fx.n_goods, bids);
  CHECK(surplus == 0.0);
  CHECK(total_value(profile, truthful_reports(fx)) == 0.0);  // 0% of the optimum 6
}

TEST_CASE("efficiency never exceeds one hundred percent") {
  GeneratorConfig config;
  config.scenario = Scenario::Super;
  ShaveProfile profile;
  profile.alpha = Eigen::VectorXd::Constant(1, 0.25);
  EquilibriumMeasure m = measure_equilibrium(config, profile, 80, 29);
  CHECK(m.efficiency_pct <= 100.0 + 1e-9);
  CHECK(m.efficiency_pct >= 0.0);
}
