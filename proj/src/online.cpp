#include "mechforge/online.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "mechforge/parallel.hpp"
#include "mechforge/rng.hpp"
#include "mechforge/winner.hpp"

namespace mechforge {

int candidate_index(Rule rule) {
  for (std::size_t k = 0; k < kCandidateRules.size(); ++k) {
    if (kCandidateRules[k] == rule) return static_cast<int>(k);
  }
  throw std::invalid_argument("candidate_index: rule is not a deployable candidate");
}

std::string selection_metric_name(SelectionMetric metric) {
  switch (metric) {
    case SelectionMetric::KlNorm: return "KLnorm";
    case SelectionMetric::L1Norm: return "L1norm";
    case SelectionMetric::L2Norm: return "L2norm";
    case SelectionMetric::LinfNorm: return "Linfnorm";
  }
  return "?";
}

SelectionMetric selection_metric_from(const std::string& name) {
  for (SelectionMetric m : {SelectionMetric::KlNorm, SelectionMetric::L1Norm,
                            SelectionMetric::L2Norm, SelectionMetric::LinfNorm}) {
    if (name == selection_metric_name(m)) return m;
  }
  throw std::invalid_argument("unknown selection metric '" + name + "'");
}

EpochRecord run_epoch(const GeneratorConfig& config, Rule deployed, const ShaveProfile& bids,
                      int epoch_size, std::uint64_t seed) {
  RngStream rng = RngStream(seed).derive("epoch");
  EpochRecord record;
  record.deployed = deployed;
  record.n_instances_total = epoch_size;

  struct Slot {
    CounterfactualInstance data;
    bool observable = false;
    double efficiency_ratio = std::numeric_limits<double>::quiet_NaN();
  };
  std::vector<Slot> slots(static_cast<std::size_t>(epoch_size));
  parallel_for(slots.size(), [&](std::size_t j) {
    Instance instance = generate(config, rng.substream(j).next_u64());
    std::vector<XorValuation> truth = truthful_reports(instance);
    auto [opt_profile, opt_surplus] = efficient_trade(instance.n_goods, truth);
    std::vector<XorValuation> reports = shaved_reports(instance, bids);
    EvaluatedInstance eval = evaluate_instance(instance.n_goods, reports);
    if (opt_surplus > 0.0) {
      slots[j].efficiency_ratio = total_value(eval.wd.profile, truth) / opt_surplus;
    }
    if (eval.wd.surplus <= 0.0 || eval.active.empty()) return;
    Slot& slot = slots[j];
    slot.observable = true;
    slot.data.surplus = eval.wd.surplus;
    const auto m = static_cast<Eigen::Index>(eval.active.size());
    slot.data.reference.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      slot.data.reference[k] = eval.wd.vcg_discounts[eval.active[static_cast<std::size_t>(k)]];
    }
    for (std::size_t c = 0; c < kCandidateRules.size(); ++c) {
      DiscountVector d =
          allocate_discounts(kCandidateRules[c], eval.wd.vcg_discounts, eval.active, eval.wd.surplus);
      slot.data.candidates[c].resize(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        slot.data.candidates[c][k] = d.discounts[eval.active[static_cast<std::size_t>(k)]];
      }
    }
  });

  double efficiency_total = 0.0;
  int efficiency_count = 0;
  for (Slot& slot : slots) {
    if (std::isfinite(slot.efficiency_ratio)) {
      efficiency_total += slot.efficiency_ratio;
      ++efficiency_count;
    }
    if (slot.observable) record.instances.push_back(std::move(slot.data));
  }
  record.realized_efficiency = efficiency_count > 0 ? efficiency_total / efficiency_count : 0.0;
  return record;
}

double selection_metric_value(SelectionMetric metric,
                              std::span<const CounterfactualInstance> data, Rule candidate,
                              const KlConfig& config) {
  const int c = candidate_index(candidate);
  if (metric == SelectionMetric::KlNorm) {
    std::vector<double> ref, mech;
    for (const CounterfactualInstance& inst : data) {
      for (Eigen::Index k = 0; k < inst.reference.size(); ++k) {
        ref.push_back(inst.reference[k] / inst.surplus);
        mech.push_back(inst.candidates[static_cast<std::size_t>(c)][k] / inst.surplus);
      }
    }
    EmpiricalDistribution h_ref = build_histogram(ref, config.n_bins, config.epsilon);
    EmpiricalDistribution h_mech = build_histogram(mech, config.n_bins, config.epsilon);
    return kl_divergence(h_ref, h_mech);
  }
  std::vector<InstancePayoffs> aligned;
  aligned.reserve(data.size());
  for (const CounterfactualInstance& inst : data) {
    aligned.push_back(
        InstancePayoffs{inst.reference, inst.candidates[static_cast<std::size_t>(c)], inst.surplus});
  }
  switch (metric) {
    case SelectionMetric::L1Norm: return lp_metric(1, true, aligned);
    case SelectionMetric::L2Norm: return lp_metric(2, true, aligned);
    case SelectionMetric::LinfNorm: return lp_metric(0, true, aligned);
    default: throw std::invalid_argument("selection_metric_value: bad metric");
  }
}

bool SelectorState::was_deployed(Rule rule) const {
  return std::find(deployed_sequence.begin(), deployed_sequence.end(), rule) !=
         deployed_sequence.end();
}

void SelectorState::record(const EpochRecord& epoch) {
  auto& bucket = history[static_cast<std::size_t>(candidate_index(epoch.deployed))];
  bucket.insert(bucket.end(), epoch.instances.begin(), epoch.instances.end());
  deployed_sequence.push_back(epoch.deployed);
}

namespace {

Rule argmin_candidate(std::span<const CounterfactualInstance> data, SelectionMetric metric,
                      const KlConfig& config) {
  Rule best = kCandidateRules.front();
  double best_value = std::numeric_limits<double>::infinity();
  for (Rule candidate : kCandidateRules) {
    double value = selection_metric_value(metric, data, candidate, config);
    if (value < best_value) {
      best_value = value;
      best = candidate;
    }
  }
  return best;
}

}  // namespace

Rule recommend(const SelectorState& state, Rule from, SelectionMetric metric,
               const KlConfig& config) {
  const auto& data = state.history[static_cast<std::size_t>(candidate_index(from))];
  if (data.empty()) return from;
  return argmin_candidate(data, metric, config);
}

Rule evaluate_and_select(const SelectorState& state, Rule current, SelectionMetric metric,
                         const KlConfig& config) {
  Rule chosen = recommend(state, current, metric, config);
  if (chosen == current || !state.was_deployed(chosen)) return chosen;

  // Follow the chain of recommendations through previously deployed rules; a
  // revisit closes a cycle.
  std::vector<Rule> chain = {current, chosen};
  Rule next = recommend(state, chosen, metric, config);
  while (true) {
    auto seen = std::find(chain.begin(), chain.end(), next);
    if (seen != chain.end()) {
      // Re-score every rule in the cycle on the merged data of all of them.
      std::vector<CounterfactualInstance> merged;
      for (auto it = seen; it != chain.end(); ++it) {
        const auto& data = state.history[static_cast<std::size_t>(candidate_index(*it))];
        merged.insert(merged.end(), data.begin(), data.end());
      }
      if (merged.empty()) return chosen;
      Rule best = *seen;
      double best_value = std::numeric_limits<double>::infinity();
      for (auto it = seen; it != chain.end(); ++it) {
        double value = selection_metric_value(metric, merged, *it, config);
        if (value < best_value) {
          best_value = value;
          best = *it;
        }
      }
      return best;
    }
    if (!state.was_deployed(next)) return chosen;
    chain.push_back(next);
    next = recommend(state, next, metric, config);
  }
}

std::vector<OnlineTraceRow> run_online_search(const GeneratorConfig& config,
                                              const OnlineParams& params, std::uint64_t seed) {
  RngStream root = RngStream(seed).derive("online");
  std::map<int, EquilibriumResult> equilibria;
  auto equilibrium_for = [&](Rule rule) -> const ShaveProfile& {
    int key = candidate_index(rule);
    auto it = equilibria.find(key);
    if (it == equilibria.end()) {
      std::uint64_t eq_seed = root.derive("equilibrium/" + rule_name(rule)).next_u64();
      it = equilibria
               .emplace(key, iterate_equilibrium(config, rule, params.n_classes,
                                                 params.equilibrium, eq_seed))
               .first;
    }
    return it->second.profile;
  };

  // The ideal-rule normalizer for the trace.
  EquilibriumMeasure small_measure =
      measure_equilibrium(config, equilibrium_for(Rule::Small), params.measure_instances,
                          root.derive("measure/small").next_u64());
  double small_efficiency = small_measure.efficiency_pct / 100.0;

  SelectorState state;
  Rule current = Rule::NoDiscount;
  std::vector<OnlineTraceRow> trace;
  for (int epoch = 0; epoch < params.n_epochs; ++epoch) {
    const ShaveProfile& bids = equilibrium_for(current);
    EpochRecord record = run_epoch(config, current, bids, params.epoch_size,
                                   root.substream(static_cast<std::uint64_t>(epoch)).next_u64());
    record.epoch = epoch;
    state.record(record);

    OnlineTraceRow row;
    row.epoch = epoch;
    row.deployed = current;
    row.efficiency_fraction =
        small_efficiency > 0.0 ? record.realized_efficiency / small_efficiency : 0.0;
    trace.push_back(row);

    current = evaluate_and_select(state, current, params.metric, params.kl);
  }
  return trace;
}

}  // namespace mechforge
