#include "mechforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mechforge {

EmpiricalDistribution build_histogram(std::span<const double> samples, int n_bins, double epsilon,
                                      double lo, double hi) {
  if (samples.empty()) throw std::invalid_argument("build_histogram: no samples");
  if (n_bins < 2) throw std::invalid_argument("build_histogram: need at least 2 bins");
  if (epsilon <= 0.0) throw std::invalid_argument("build_histogram: epsilon must be positive");
  if (!(hi > lo)) throw std::invalid_argument("build_histogram: empty range");
  EmpiricalDistribution dist;
  dist.lo = lo;
  dist.hi = hi;
  dist.n_bins = n_bins;
  dist.epsilon = epsilon;
  dist.sample_count = static_cast<std::int64_t>(samples.size());
  Eigen::VectorXd counts = Eigen::VectorXd::Constant(n_bins + 1, epsilon);
  const double width = (hi - lo) / n_bins;
  for (double x : samples) {
    int bin;
    if (x > hi) {
      bin = n_bins;  // overflow
    } else {
      bin = std::clamp(static_cast<int>((x - lo) / width), 0, n_bins - 1);
    }
    counts[bin] += 1.0;
  }
  dist.prob = counts / counts.sum();
  return dist;
}

double kl_divergence(const EmpiricalDistribution& reference, const EmpiricalDistribution& other) {
  if (!reference.same_binning(other)) {
    throw std::invalid_argument("kl_divergence: histograms use different binnings");
  }
  return (reference.prob.array() * (reference.prob.array() / other.prob.array()).log()).sum();
}

EvaluatedInstance evaluate_instance(int n_goods, std::span<const XorValuation> reports) {
  EvaluatedInstance eval;
  eval.wd = solve_vcg(n_goods, reports);
  eval.active = trading_agents(eval.wd.profile, reports);
  return eval;
}

InstancePayoffs instance_payoffs(const EvaluatedInstance& eval, Rule rule) {
  InstancePayoffs out;
  out.surplus = eval.wd.surplus;
  const auto m = static_cast<Eigen::Index>(eval.active.size());
  out.reference.resize(m);
  out.mechanism.resize(m);
  DiscountVector d = allocate_discounts(rule, eval.wd.vcg_discounts, eval.active, eval.wd.surplus);
  for (Eigen::Index k = 0; k < m; ++k) {
    int agent = eval.active[static_cast<std::size_t>(k)];
    out.reference[k] = eval.wd.vcg_discounts[agent];
    out.mechanism[k] = d.discounts[agent];
  }
  return out;
}

std::vector<PayoffSample> collect_payoffs(std::span<const Instance> instances,
                                          std::span<const std::vector<XorValuation>> reports,
                                          Rule rule) {
  if (instances.size() != reports.size()) {
    throw std::invalid_argument("collect_payoffs: instances and reports differ in length");
  }
  std::vector<PayoffSample> samples;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    EvaluatedInstance eval = evaluate_instance(instances[i].n_goods, reports[i]);
    if (eval.wd.surplus <= 0.0 || eval.active.empty()) continue;
    InstancePayoffs payoffs = instance_payoffs(eval, rule);
    for (std::size_t k = 0; k < eval.active.size(); ++k) {
      PayoffSample s;
      s.instance_id = static_cast<int>(i);
      s.agent_id = eval.active[k];
      s.payoff = payoffs.mechanism[static_cast<Eigen::Index>(k)];
      s.normalized = s.payoff / eval.wd.surplus;
      samples.push_back(s);
    }
  }
  return samples;
}

namespace {

std::vector<double> normalized_of(std::span<const PayoffSample> samples) {
  std::vector<double> xs;
  xs.reserve(samples.size());
  for (const PayoffSample& s : samples) xs.push_back(s.normalized);
  return xs;
}

std::vector<double> raw_of(std::span<const PayoffSample> samples) {
  std::vector<double> xs;
  xs.reserve(samples.size());
  for (const PayoffSample& s : samples) xs.push_back(s.payoff);
  return xs;
}

}  // namespace

double klnorm_metric(std::span<const PayoffSample> reference,
                     std::span<const PayoffSample> mechanism, const KlConfig& config) {
  std::vector<double> ref = normalized_of(reference);
  std::vector<double> mech = normalized_of(mechanism);
  EmpiricalDistribution h_ref = build_histogram(ref, config.n_bins, config.epsilon);
  EmpiricalDistribution h_mech = build_histogram(mech, config.n_bins, config.epsilon);
  return kl_divergence(h_ref, h_mech);
}

double kl_metric(std::span<const PayoffSample> reference, std::span<const PayoffSample> mechanism,
                 const KlConfig& config) {
  std::vector<double> ref = raw_of(reference);
  std::vector<double> mech = raw_of(mechanism);
  double hi = 0.0;
  for (double x : ref) hi = std::max(hi, x);
  for (double x : mech) hi = std::max(hi, x);
  if (hi <= 0.0) hi = 1.0;
  EmpiricalDistribution h_ref = build_histogram(ref, config.n_bins, config.epsilon, 0.0, hi);
  EmpiricalDistribution h_mech = build_histogram(mech, config.n_bins, config.epsilon, 0.0, hi);
  return kl_divergence(h_ref, h_mech);
}

double lp_metric(int p, bool normalized, std::span<const InstancePayoffs> instances) {
  double total = 0.0;
  std::int64_t used = 0;
  for (const InstancePayoffs& inst : instances) {
    if (inst.reference.size() == 0) continue;
    if (normalized && inst.surplus <= 0.0) continue;
    Eigen::VectorXd diff = inst.reference - inst.mechanism;
    if (normalized) diff /= inst.surplus;
    double dist;
    switch (p) {
      case 1: dist = diff.lpNorm<1>(); break;
      case 2: dist = diff.lpNorm<2>(); break;
      case 0: dist = diff.lpNorm<Eigen::Infinity>(); break;
      default: throw std::invalid_argument("lp_metric: p must be 1, 2, or 0 (max norm)");
    }
    total += dist;
    ++used;
  }
  if (used == 0) return 0.0;
  return total / static_cast<double>(used);
}

std::vector<MetricReport> metric_table(std::span<const EvaluatedInstance> evaluated,
                                       std::span<const Rule> rules, const KlConfig& config) {
  // Reference samples once; per-rule payoffs reuse the solved instances.
  std::vector<PayoffSample> ref_samples;
  for (std::size_t i = 0; i < evaluated.size(); ++i) {
    const EvaluatedInstance& eval = evaluated[i];
    if (eval.wd.surplus <= 0.0 || eval.active.empty()) continue;
    for (int agent : eval.active) {
      PayoffSample s;
      s.instance_id = static_cast<int>(i);
      s.agent_id = agent;
      s.payoff = eval.wd.vcg_discounts[agent];
      s.normalized = s.payoff / eval.wd.surplus;
      ref_samples.push_back(s);
    }
  }

  std::vector<MetricReport> table;
  for (Rule rule : rules) {
    MetricReport row;
    row.rule = rule;
    std::vector<PayoffSample> mech_samples;
    std::vector<InstancePayoffs> per_instance;
    for (std::size_t i = 0; i < evaluated.size(); ++i) {
      const EvaluatedInstance& eval = evaluated[i];
      if (eval.wd.surplus <= 0.0 || eval.active.empty()) {
        ++row.n_skipped;
        continue;
      }
      InstancePayoffs payoffs = instance_payoffs(eval, rule);
      for (std::size_t k = 0; k < eval.active.size(); ++k) {
        PayoffSample s;
        s.instance_id = static_cast<int>(i);
        s.agent_id = eval.active[k];
        s.payoff = payoffs.mechanism[static_cast<Eigen::Index>(k)];
        s.normalized = s.payoff / eval.wd.surplus;
        mech_samples.push_back(s);
      }
      per_instance.push_back(std::move(payoffs));
      ++row.n_instances;
    }
    row.n_samples = static_cast<std::int64_t>(mech_samples.size());
    if (!mech_samples.empty()) {
      row.values[0] = klnorm_metric(ref_samples, mech_samples, config);
      row.values[1] = kl_metric(ref_samples, mech_samples, config);
      row.values[2] = lp_metric(1, false, per_instance);
      row.values[3] = lp_metric(1, true, per_instance);
      row.values[4] = lp_metric(2, false, per_instance);
      row.values[5] = lp_metric(2, true, per_instance);
      row.values[6] = lp_metric(0, false, per_instance);
      row.values[7] = lp_metric(0, true, per_instance);
    }
    table.push_back(row);
  }
  return table;
}

}  // namespace mechforge
