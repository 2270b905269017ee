#include "mechforge/deviation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mechforge/metrics.hpp"
#include "mechforge/parallel.hpp"
#include "mechforge/rng.hpp"
#include "mechforge/winner.hpp"

namespace mechforge {

Eigen::VectorXd default_rho_grid() {
  Eigen::VectorXd grid(40);
  for (int j = 0; j < 40; ++j) grid[j] = 0.025 * (j + 1);
  return grid;
}

namespace {

struct PairCurve {
  Eigen::VectorXd profit;      // normalized by the truthful VCG discount
  std::vector<bool> trades;    // still trading at rho?
};

// Scale the report on the winning atom toward "shaving": buyers lower the
// value by rho, sellers raise the reserve magnitude by (2 - rho), so rho = 1
// is truthful for both roles.
double deviated_value(double truthful_value, Role role, double rho) {
  return role == Role::Buyer ? rho * truthful_value : (2.0 - rho) * truthful_value;
}

PairCurve pair_curve(const Instance& instance, int agent, Rule rule,
                     const Eigen::VectorXd& rho_grid, const WdResult& truthful) {
  const auto agent_index = static_cast<std::size_t>(agent);
  const XorValuation& truth = instance.agents[agent_index].valuation;
  int winning_atom = truthful.profile.assignment[agent_index];
  double truthful_value = truth.atoms[static_cast<std::size_t>(winning_atom)].value;
  double vcg_profit = truthful.vcg_discounts[agent];

  std::vector<XorValuation> reports = truthful_reports(instance);
  PairCurve curve;
  curve.profit.resize(rho_grid.size());
  curve.trades.assign(static_cast<std::size_t>(rho_grid.size()), false);
  for (Eigen::Index r = 0; r < rho_grid.size(); ++r) {
    XorValuation deviant;
    deviant.role = truth.role;
    deviant.atoms.push_back(Atom{truth.atoms[static_cast<std::size_t>(winning_atom)].trade,
                                 deviated_value(truthful_value, truth.role, rho_grid[r])});
    reports[agent_index] = deviant;
    WdResult wd = solve_vcg(instance.n_goods, reports);
    std::vector<int> trading = trading_agents(wd.profile, reports);
    DiscountVector d = allocate_discounts(rule, wd.vcg_discounts, trading, wd.surplus);
    int assigned = wd.profile.assignment[agent_index];
    double true_value = assigned == TradeProfile::kNull ? 0.0 : truthful_value;
    double payment =
        assigned_value(reports[agent_index], assigned) - d.discounts[agent];
    curve.profit[r] = (true_value - payment) / vcg_profit;
    curve.trades[static_cast<std::size_t>(r)] = assigned != TradeProfile::kNull;
  }
  return curve;
}

std::vector<int> eligible_agents(const WdResult& truthful,
                                 std::span<const XorValuation> reports) {
  std::vector<int> eligible;
  for (int agent : trading_agents(truthful.profile, reports)) {
    if (truthful.vcg_discounts[agent] > 0.0) eligible.push_back(agent);
  }
  return eligible;
}

}  // namespace

DeviationCurve unilateral_curve(const Instance& instance, int agent, Rule rule,
                                const Eigen::VectorXd& rho_grid) {
  std::vector<XorValuation> truth = truthful_reports(instance);
  WdResult wd = solve_vcg(instance.n_goods, truth);
  std::vector<int> eligible = eligible_agents(wd, truth);
  if (std::find(eligible.begin(), eligible.end(), agent) == eligible.end()) {
    throw std::invalid_argument(
        "unilateral_curve: agent must trade truthfully with a positive VCG discount");
  }
  PairCurve pair = pair_curve(instance, agent, rule, rho_grid, wd);
  DeviationCurve curve;
  curve.variant = DeviationVariant::Single;
  curve.rho = rho_grid;
  curve.profit = pair.profit;
  return curve;
}

ExpectedCurves expected_curves(const GeneratorConfig& config, Rule rule,
                               const Eigen::VectorXd& rho_grid, int n_instances,
                               std::uint64_t seed) {
  RngStream rng = RngStream(seed).derive("deviation");
  std::vector<std::vector<PairCurve>> per_instance(static_cast<std::size_t>(n_instances));
  parallel_for(static_cast<std::size_t>(n_instances), [&](std::size_t j) {
    Instance instance = generate(config, rng.substream(j).next_u64());
    std::vector<XorValuation> truth = truthful_reports(instance);
    WdResult wd = solve_vcg(instance.n_goods, truth);
    for (int agent : eligible_agents(wd, truth)) {
      per_instance[j].push_back(pair_curve(instance, agent, rule, rho_grid, wd));
    }
  });

  const Eigen::Index n_rho = rho_grid.size();
  Eigen::VectorXd sum_all = Eigen::VectorXd::Zero(n_rho);
  Eigen::VectorXd sum_gain = Eigen::VectorXd::Zero(n_rho);
  Eigen::VectorXd sum_loss = Eigen::VectorXd::Zero(n_rho);
  Eigen::VectorXd count_gain = Eigen::VectorXd::Zero(n_rho);
  Eigen::VectorXd count_loss = Eigen::VectorXd::Zero(n_rho);
  std::int64_t n_pairs = 0;
  for (const auto& pairs : per_instance) {
    for (const PairCurve& pair : pairs) {
      ++n_pairs;
      sum_all += pair.profit;
      for (Eigen::Index r = 0; r < n_rho; ++r) {
        if (pair.trades[static_cast<std::size_t>(r)]) {
          sum_gain[r] += pair.profit[r];
          count_gain[r] += 1.0;
        } else {
          sum_loss[r] += pair.profit[r];
          count_loss[r] += 1.0;
        }
      }
    }
  }

  auto finish = [&](DeviationVariant variant, const Eigen::VectorXd& sum,
                    const Eigen::VectorXd& count) {
    DeviationCurve curve;
    curve.variant = variant;
    curve.rho = rho_grid;
    curve.profit.resize(n_rho);
    for (Eigen::Index r = 0; r < n_rho; ++r) {
      curve.profit[r] =
          count[r] > 0.0 ? sum[r] / count[r] : std::numeric_limits<double>::quiet_NaN();
    }
    return curve;
  };

  ExpectedCurves out;
  out.n_pairs = n_pairs;
  out.expected = finish(DeviationVariant::Expected, sum_all,
                        Eigen::VectorXd::Constant(n_rho, static_cast<double>(n_pairs)));
  out.conditional_gain = finish(DeviationVariant::ConditionalGain, sum_gain, count_gain);
  out.conditional_loss = finish(DeviationVariant::ConditionalLoss, sum_loss, count_loss);
  return out;
}

}  // namespace mechforge
