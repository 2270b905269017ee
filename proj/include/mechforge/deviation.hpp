#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "mechforge/generators.hpp"
#include "mechforge/market.hpp"
#include "mechforge/payment_rules.hpp"

namespace mechforge {

enum class DeviationVariant { Single, Expected, ConditionalGain, ConditionalLoss };

/// Profit from unilateral misreporting, per report ratio rho = V_R / V_T.
/// Profit is normalized by the agent's truthful VCG discount; cells with no
/// contributing pairs are NaN.
struct DeviationCurve {
  DeviationVariant variant = DeviationVariant::Single;
  Eigen::VectorXd rho;
  Eigen::VectorXd profit;
};

/// Default grid: 41 points on (0, 1], spacing 0.025.
Eigen::VectorXd default_rho_grid();

/// Single-agent curve: the agent keeps only its truthful winning atom, scales
/// its report by rho (sellers scale the reserve magnitude by 2 - rho), all
/// others stay truthful, and winner determination is re-run per point.
/// Requires the agent to be active in the truthful trade with a positive VCG
/// discount; throws std::invalid_argument otherwise.
DeviationCurve unilateral_curve(const Instance& instance, int agent, Rule rule,
                                const Eigen::VectorXd& rho_grid);

struct ExpectedCurves {
  DeviationCurve expected;
  DeviationCurve conditional_gain;  // pairs still trading at rho
  DeviationCurve conditional_loss;  // pairs that lost their trade at rho
  std::int64_t n_pairs = 0;         // (instance, eligible agent) pairs
};

/// Averages unilateral curves over sampled instances and all eligible agents.
ExpectedCurves expected_curves(const GeneratorConfig& config, Rule rule,
                               const Eigen::VectorXd& rho_grid, int n_instances,
                               std::uint64_t seed);

}  // namespace mechforge
