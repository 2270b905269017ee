#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mechforge/market.hpp"
#include "mechforge/payment_rules.hpp"
#include "mechforge/winner.hpp"

namespace mechforge {

/// Payoff of one active agent on one instance. At truthful reports the payoff
/// equals the agent's discount under the rule; the reference payoff is the
/// VCG discount.
struct PayoffSample {
  int instance_id = 0;
  int agent_id = 0;
  double payoff = 0.0;      // discount at the evaluated reports
  double normalized = 0.0;  // payoff / V*
};

/// Equal-width histogram on [lo, hi] plus one overflow bin, Laplace-smoothed
/// so every bin carries positive probability.
struct EmpiricalDistribution {
  double lo = 0.0;
  double hi = 1.0;
  int n_bins = 0;       // regular bins; prob has n_bins + 1 entries
  double epsilon = 1.0; // pseudo-count per bin
  Eigen::VectorXd prob;
  std::int64_t sample_count = 0;

  bool same_binning(const EmpiricalDistribution& other) const {
    return lo == other.lo && hi == other.hi && n_bins == other.n_bins &&
           epsilon == other.epsilon;
  }
};

EmpiricalDistribution build_histogram(std::span<const double> samples, int n_bins, double epsilon,
                                      double lo = 0.0, double hi = 1.0);

/// Sum_b ref(b) * ln(ref(b) / other(b)); nonnegative, finite under smoothing.
double kl_divergence(const EmpiricalDistribution& reference, const EmpiricalDistribution& other);

/// Winner determination evaluated once per instance and reused across rules.
struct EvaluatedInstance {
  WdResult wd;
  std::vector<int> active;  // agents with a nonzero trade in lambda*
};

EvaluatedInstance evaluate_instance(int n_goods, std::span<const XorValuation> reports);

/// Per-instance payoff vectors over active agents, aligned reference
/// (VCG discounts) against mechanism discounts.
struct InstancePayoffs {
  Eigen::VectorXd reference;
  Eigen::VectorXd mechanism;
  double surplus = 0.0;
};

InstancePayoffs instance_payoffs(const EvaluatedInstance& eval, Rule rule);

/// Spec'd batch operation: evaluate every instance at the given reports and
/// emit samples for active agents (instances with V* = 0 contribute none).
std::vector<PayoffSample> collect_payoffs(std::span<const Instance> instances,
                                          std::span<const std::vector<XorValuation>> reports,
                                          Rule rule);

struct KlConfig {
  int n_bins = 50;
  double epsilon = 1.0;
};

/// KL distance between the smoothed normalized-payoff histograms of the
/// reference and mechanism sample sets.
double klnorm_metric(std::span<const PayoffSample> reference, std::span<const PayoffSample> mechanism,
                     const KlConfig& config = {});

/// Unnormalized variant: raw payoffs, bins spanning the pooled sample range.
double kl_metric(std::span<const PayoffSample> reference, std::span<const PayoffSample> mechanism,
                 const KlConfig& config = {});

/// Mean over instances of the Lp distance between reference and mechanism
/// payoff vectors (p = 1, 2, or 0 meaning the max norm), optionally dividing
/// both vectors by the instance surplus.
double lp_metric(int p, bool normalized, std::span<const InstancePayoffs> instances);

inline constexpr const char* kMetricNames[] = {"KLnorm", "KL",     "L1",   "L1norm",
                                               "L2",     "L2norm", "Linf", "Linfnorm"};

/// One row of the at-truth metric table: the eight metrics for one rule.
struct MetricReport {
  Rule rule = Rule::Vcg;
  double values[8] = {};
  std::int64_t n_samples = 0;
  std::int64_t n_instances = 0;
  std::int64_t n_skipped = 0;  // V* = 0 instances
};

/// Evaluates all eight metrics for each rule over one batch of evaluated
/// instances; the reference side is always the VCG discounts.
std::vector<MetricReport> metric_table(std::span<const EvaluatedInstance> evaluated,
                                       std::span<const Rule> rules, const KlConfig& config = {});

}  // namespace mechforge
