#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mechforge/equilibrium.hpp"
#include "mechforge/generators.hpp"
#include "mechforge/metrics.hpp"
#include "mechforge/payment_rules.hpp"

namespace mechforge {

/// Rules eligible for online deployment: the balanced family plus No
/// Discount. VCG is the reference, never a candidate.
inline constexpr std::array<Rule, 8> kCandidateRules = {
    Rule::NoDiscount, Rule::Equal,     Rule::Fractional, Rule::Small,
    Rule::Large,      Rule::Threshold, Rule::Reverse,    Rule::TwoTriangle,
};

int candidate_index(Rule rule);

enum class SelectionMetric { KlNorm, L1Norm, L2Norm, LinfNorm };

std::string selection_metric_name(SelectionMetric metric);
SelectionMetric selection_metric_from(const std::string& name);

/// Everything the selector may observe about one instance: bids produced the
/// efficient trade, the surplus, the bid-based VCG reference payoffs, and the
/// payoff each candidate rule would have induced on the same bids.
struct CounterfactualInstance {
  double surplus = 0.0;
  Eigen::VectorXd reference;                     // VCG discounts, active agents
  std::array<Eigen::VectorXd, 8> candidates;     // per-candidate discounts
};

struct EpochRecord {
  int epoch = 0;
  Rule deployed = Rule::NoDiscount;
  std::vector<CounterfactualInstance> instances;  // instances with observable trade
  int n_instances_total = 0;
  double realized_efficiency = 0.0;  // simulator-side truth, for reporting only
};

/// Runs one epoch: fresh instances, bids per the deployed rule's equilibrium
/// profile, counterfactual payoffs for every candidate on the same bids.
EpochRecord run_epoch(const GeneratorConfig& config, Rule deployed, const ShaveProfile& bids,
                      int epoch_size, std::uint64_t seed);

/// Metric value of one candidate over accumulated counterfactual data, with
/// the bid-based VCG payoffs as the reference side.
double selection_metric_value(SelectionMetric metric,
                              std::span<const CounterfactualInstance> data, Rule candidate,
                              const KlConfig& config = {});

struct SelectorState {
  std::array<std::vector<CounterfactualInstance>, 8> history;  // per candidate rule
  std::vector<Rule> deployed_sequence;

  bool was_deployed(Rule rule) const;
  void record(const EpochRecord& epoch);
};

/// Argmin candidate on the data gathered under `from`; ties break in
/// candidate enumeration order. Returns `from` itself when it has no data.
Rule recommend(const SelectorState& state, Rule from, SelectionMetric metric,
               const KlConfig& config = {});

/// The switch decision with cycle breaking: when the recommendation chain
/// closes a loop among previously deployed rules, the looped rules are
/// re-scored on their merged data and the best of them is chosen.
Rule evaluate_and_select(const SelectorState& state, Rule current, SelectionMetric metric,
                         const KlConfig& config = {});

struct OnlineParams {
  SelectionMetric metric = SelectionMetric::KlNorm;
  int n_epochs = 20;
  int epoch_size = 100;
  int n_classes = 1;
  IterationParams equilibrium;
  KlConfig kl;
  int measure_instances = 400;  // for the ideal-rule efficiency normalizer
};

struct OnlineTraceRow {
  int epoch = 0;
  Rule deployed = Rule::NoDiscount;
  double efficiency_fraction = 0.0;  // realized efficiency / Small's equilibrium efficiency
};

/// Full online search: start at No Discount, per epoch deploy, observe,
/// select. Equilibrium profiles are computed once per rule and cached.
std::vector<OnlineTraceRow> run_online_search(const GeneratorConfig& config,
                                              const OnlineParams& params, std::uint64_t seed);

}  // namespace mechforge
