#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "mechforge/generators.hpp"
#include "mechforge/market.hpp"
#include "mechforge/payment_rules.hpp"

namespace mechforge {

/// Symmetric shave-factor strategy, one factor per valuation class. Buyers in
/// class k report (1 - alpha_k) v, sellers (1 + alpha_k) v.
struct ShaveProfile {
  Eigen::VectorXd alpha;            // size K, each in [0,1]
  std::vector<double> boundaries;   // K-1 ascending class cut points

  int n_classes() const { return static_cast<int>(alpha.size()); }
};

/// Scales every atom value: buyers shaded down, seller reserves pushed up.
XorValuation apply_shave(const XorValuation& valuation, double alpha);

/// Class cut points: sample fresh agents from the scenario, record each one's
/// 95th percentile of absolute atom value, and cut that empirical
/// distribution into K equal parts (tritiles for K = 3). K up to 3.
std::vector<double> build_class_reference(const GeneratorConfig& config, int n_samples, int K,
                                          std::uint64_t seed);

/// 95th percentile of absolute atom value, the classification statistic.
double valuation_statistic(const XorValuation& valuation);

/// Index of the interval containing the agent's statistic; ties go down.
int classify_agent(const XorValuation& valuation, std::span<const double> boundaries);

/// Every agent's report under the profile.
std::vector<XorValuation> shaved_reports(const Instance& instance, const ShaveProfile& profile);

/// Grid argmax of agent i's realized true utility when i shaves by alpha and
/// everyone else bids per the profile; ties resolve to the smaller alpha.
double best_response_alpha(const Instance& instance, int agent, const ShaveProfile& opponents,
                           Rule rule, std::span<const double> grid);

struct IterationParams {
  double theta = 0.5;               // damping on the provisional factors
  double kappa = 0.001;             // stop when max_k |alpha_hat - alpha_bar| drops below
  int grid_points = 10;
  int instances_per_iteration = 200;
  int max_iterations = 100;
  double initial_span = 0.9;        // first grid covers [0, initial_span]
  int class_reference_samples = 300;
};

struct IterationTraceRow {
  int iteration = 0;
  Eigen::VectorXd alpha_hat;   // provisional factors entering the iteration
  Eigen::VectorXd alpha_bar;   // mean best response per class
  double error = 0.0;          // max_k |alpha_hat_k - alpha_bar_k|
};

struct EquilibriumResult {
  ShaveProfile profile;
  bool converged = false;
  std::vector<IterationTraceRow> trace;

  double mean_shave() const { return profile.alpha.mean(); }
};

/// Iterated best response with damped updates and endogenous grid width.
EquilibriumResult iterate_equilibrium(const GeneratorConfig& config, Rule rule, int n_classes,
                                      const IterationParams& params, std::uint64_t seed);

struct EquilibriumMeasure {
  double mean_shave_pct = 0.0;
  double efficiency_pct = 0.0;
  int n_used = 0;  // instances with positive truthful surplus
};

/// Allocative efficiency of bidding per the profile, against truthful optima.
EquilibriumMeasure measure_equilibrium(const GeneratorConfig& config, const ShaveProfile& profile,
                                       int n_instances, std::uint64_t seed);

}  // namespace mechforge
