#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <utility>

#include "mechforge/market.hpp"

namespace mechforge {

/// Efficient trade, marginal economies and VCG discounts for one report set.
struct WdResult {
  TradeProfile profile;            // lambda*
  double surplus = 0.0;            // V*
  Eigen::VectorXd marginal;        // V* without agent i
  Eigen::VectorXd vcg_discounts;   // surplus - marginal, componentwise
};

/// Exact surplus-maximizing feasible profile over the reported XOR atoms.
/// Ties are broken toward the lexicographically smallest assignment vector
/// (agents in id order, null before atom 0 before atom 1, ...). Surplus is
/// the agent-id-order float sum of the chosen atom values, so it is
/// bit-identical to a lexicographic exhaustive enumeration.
std::pair<TradeProfile, double> efficient_trade(int n_goods, std::span<const XorValuation> reports);

/// Component i is the optimal surplus with agent i removed.
Eigen::VectorXd marginal_surpluses(int n_goods, std::span<const XorValuation> reports);

/// Delta_vcg,i = V* - V*_{-i}; zero for agents with the null trade.
Eigen::VectorXd vcg_discounts(double surplus, const Eigen::VectorXd& marginal);

/// p_vcg,i = reported value of the assigned trade minus the VCG discount.
Eigen::VectorXd vcg_payments(std::span<const XorValuation> reports, const TradeProfile& profile,
                             const Eigen::VectorXd& discounts);

/// One-call bundle: efficient trade plus all n marginal economies.
WdResult solve_vcg(int n_goods, std::span<const XorValuation> reports);

/// Winner-determination integer program in LP text format, for cross-checking
/// against an external MIP solver.
std::string winner_lp_text(int n_goods, std::span<const XorValuation> reports);

}  // namespace mechforge
