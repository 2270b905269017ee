#include "mechforge/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mechforge/parallel.hpp"
#include "mechforge/stats.hpp"
#include "mechforge/winner.hpp"

namespace mechforge {

XorValuation apply_shave(const XorValuation& valuation, double alpha) {
  XorValuation shaved = valuation;
  double factor = valuation.role == Role::Buyer ? 1.0 - alpha : 1.0 + alpha;
  for (Atom& atom : shaved.atoms) atom.value *= factor;
  return shaved;
}

double valuation_statistic(const XorValuation& valuation) {
  std::vector<double> magnitudes;
  magnitudes.reserve(valuation.atoms.size());
  for (const Atom& atom : valuation.atoms) magnitudes.push_back(std::abs(atom.value));
  if (magnitudes.empty()) return 0.0;
  return quantile(magnitudes, 0.95);
}

std::vector<double> build_class_reference(const GeneratorConfig& config, int n_samples, int K,
                                          std::uint64_t seed) {
  if (K < 1 || K > 3) throw std::invalid_argument("build_class_reference: K must be 1, 2 or 3");
  if (K == 1) return {};
  if (n_samples < 300) throw std::invalid_argument("build_class_reference: need >= 300 samples");
  RngStream rng = RngStream(seed).derive("class_reference");
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(n_samples));
  std::uint64_t index = 0;
  while (static_cast<int>(stats.size()) < n_samples) {
    Instance instance = generate(config, rng.substream(index++).next_u64());
    for (const Agent& agent : instance.agents) {
      if (static_cast<int>(stats.size()) >= n_samples) break;
      stats.push_back(valuation_statistic(agent.valuation));
    }
  }
  std::vector<double> boundaries;
  for (int k = 1; k < K; ++k) {
    boundaries.push_back(quantile(stats, static_cast<double>(k) / K));
  }
  return boundaries;
}

int classify_agent(const XorValuation& valuation, std::span<const double> boundaries) {
  double stat = valuation_statistic(valuation);
  int cls = 0;
  for (double b : boundaries) {
    if (b < stat) ++cls;
  }
  return cls;
}

std::vector<XorValuation> shaved_reports(const Instance& instance, const ShaveProfile& profile) {
  std::vector<XorValuation> reports;
  reports.reserve(instance.agents.size());
  for (const Agent& agent : instance.agents) {
    int cls = classify_agent(agent.valuation, profile.boundaries);
    reports.push_back(apply_shave(agent.valuation, profile.alpha[cls]));
  }
  return reports;
}

double best_response_alpha(const Instance& instance, int agent, const ShaveProfile& opponents,
                           Rule rule, std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("best_response_alpha: empty grid");
  std::vector<XorValuation> reports = shaved_reports(instance, opponents);
  const XorValuation& truth = instance.agents[static_cast<std::size_t>(agent)].valuation;

  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  double best_alpha = sorted.front();
  double best_utility = -std::numeric_limits<double>::infinity();
  for (double alpha : sorted) {
    reports[static_cast<std::size_t>(agent)] = apply_shave(truth, alpha);
    WdResult wd = solve_vcg(instance.n_goods, reports);
    std::vector<int> trading = trading_agents(wd.profile, reports);
    DiscountVector d = allocate_discounts(rule, wd.vcg_discounts, trading, wd.surplus);
    double payment = assigned_value(reports[static_cast<std::size_t>(agent)],
                                    wd.profile.assignment[static_cast<std::size_t>(agent)]) -
                     d.discounts[agent];
    double utility =
        assigned_value(truth, wd.profile.assignment[static_cast<std::size_t>(agent)]) - payment;
    if (utility > best_utility + 1e-12) {
      best_utility = utility;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

namespace {

Eigen::VectorXd class_grid(double center, double half_width, int points, double initial_span,
                           bool first_iteration) {
  Eigen::VectorXd grid(points);
  if (first_iteration) {
    for (int j = 0; j < points; ++j) {
      grid[j] = initial_span * static_cast<double>(j) / (points - 1);
    }
    return grid;
  }
  double lo = std::max(0.0, center - half_width);
  double hi = std::min(1.0, center + half_width);
  for (int j = 0; j < points; ++j) {
    grid[j] = lo + (hi - lo) * static_cast<double>(j) / (points - 1);
  }
  return grid;
}

}  // namespace

EquilibriumResult iterate_equilibrium(const GeneratorConfig& config, Rule rule, int n_classes,
                                      const IterationParams& params, std::uint64_t seed) {
  if (params.theta <= 0.0 || params.theta >= 1.0) {
    throw std::invalid_argument("iterate_equilibrium: theta outside (0,1)");
  }
  if (params.kappa <= 0.0 || params.grid_points < 2) {
    throw std::invalid_argument("iterate_equilibrium: bad kappa or grid");
  }
  RngStream root = RngStream(seed).derive("equilibrium");

  EquilibriumResult result;
  result.profile.boundaries =
      build_class_reference(config, params.class_reference_samples, n_classes, seed);
  result.profile.alpha = Eigen::VectorXd::Zero(n_classes);

  std::vector<Eigen::VectorXd> grids(static_cast<std::size_t>(n_classes));
  for (int k = 0; k < n_classes; ++k) {
    grids[static_cast<std::size_t>(k)] =
        class_grid(0.0, 0.0, params.grid_points, params.initial_span, true);
  }

  for (int t = 1; t <= params.max_iterations; ++t) {
    RngStream iter_rng = root.substream(static_cast<std::uint64_t>(t));
    std::vector<Instance> instances;
    instances.reserve(static_cast<std::size_t>(params.instances_per_iteration));
    for (int j = 0; j < params.instances_per_iteration; ++j) {
      instances.push_back(
          generate(config, iter_rng.substream(static_cast<std::uint64_t>(j)).next_u64()));
    }

    // Per-instance best responses are independent given the current profile.
    std::vector<std::vector<std::pair<int, double>>> responses(instances.size());
    parallel_for(instances.size(), [&](std::size_t j) {
      const Instance& instance = instances[j];
      for (std::size_t i = 0; i < instance.agents.size(); ++i) {
        int cls = classify_agent(instance.agents[i].valuation, result.profile.boundaries);
        double alpha =
            best_response_alpha(instance, static_cast<int>(i), result.profile, rule,
                                std::span<const double>(grids[static_cast<std::size_t>(cls)].data(),
                                                        static_cast<std::size_t>(params.grid_points)));
        responses[j].emplace_back(cls, alpha);
      }
    });

    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n_classes);
    Eigen::VectorXd count = Eigen::VectorXd::Zero(n_classes);
    for (const auto& per_instance : responses) {
      for (auto [cls, alpha] : per_instance) {
        sum[cls] += alpha;
        count[cls] += 1.0;
      }
    }
    // A class with no members this iteration carries no information: its
    // mean stays at the provisional value and its grid is left untouched.
    Eigen::VectorXd alpha_bar = result.profile.alpha;
    for (int k = 0; k < n_classes; ++k) {
      if (count[k] > 0.0) alpha_bar[k] = sum[k] / count[k];
    }

    IterationTraceRow row;
    row.iteration = t;
    row.alpha_hat = result.profile.alpha;
    row.alpha_bar = alpha_bar;
    row.error = (result.profile.alpha - alpha_bar).cwiseAbs().maxCoeff();
    result.trace.push_back(row);

    result.profile.alpha =
        params.theta * result.profile.alpha + (1.0 - params.theta) * alpha_bar;

    if (row.error < params.kappa) {
      result.converged = true;
      break;
    }
    for (int k = 0; k < n_classes; ++k) {
      if (count[k] == 0.0) continue;
      grids[static_cast<std::size_t>(k)] =
          class_grid(result.profile.alpha[k], std::abs(row.alpha_hat[k] - alpha_bar[k]),
                     params.grid_points, params.initial_span, false);
    }
  }
  return result;
}

EquilibriumMeasure measure_equilibrium(const GeneratorConfig& config, const ShaveProfile& profile,
                                       int n_instances, std::uint64_t seed) {
  RngStream rng = RngStream(seed).derive("equilibrium/measure");
  std::vector<double> ratios(static_cast<std::size_t>(n_instances),
                             -std::numeric_limits<double>::infinity());
  parallel_for(static_cast<std::size_t>(n_instances), [&](std::size_t j) {
    Instance instance = generate(config, rng.substream(j).next_u64());
    std::vector<XorValuation> truth = truthful_reports(instance);
    auto [opt_profile, opt_surplus] = efficient_trade(instance.n_goods, truth);
    if (opt_surplus <= 0.0) return;  // no efficiency defined
    std::vector<XorValuation> bids = shaved_reports(instance, profile);
    auto [bid_profile, bid_surplus] = efficient_trade(instance.n_goods, bids);
    ratios[j] = total_value(bid_profile, truth) / opt_surplus;
  });
  EquilibriumMeasure out;
  out.mean_shave_pct = 100.0 * profile.alpha.mean();
  double total = 0.0;
  for (double r : ratios) {
    if (std::isfinite(r)) {
      total += r;
      ++out.n_used;
    }
  }
  out.efficiency_pct = out.n_used > 0 ? 100.0 * total / out.n_used : 100.0;
  return out;
}

}  // namespace mechforge
