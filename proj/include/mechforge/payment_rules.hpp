#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mechforge/market.hpp"

namespace mechforge {

/// The reference rule plus the eight surplus-allocation rules. Enumeration
/// order is the tie-break order everywhere a minimizer must be unique.
enum class Rule {
  Vcg,
  NoDiscount,
  Equal,
  Fractional,
  Small,
  Large,
  Threshold,
  Reverse,
  TwoTriangle,
};

inline constexpr Rule kAllRules[] = {
    Rule::Vcg,      Rule::NoDiscount, Rule::Equal,     Rule::Fractional, Rule::Small,
    Rule::Large,    Rule::Threshold,  Rule::Reverse,   Rule::TwoTriangle,
};

/// The seven exactly-balanced rules (everything but VCG and No Discount).
inline constexpr Rule kBalancedRules[] = {
    Rule::Equal, Rule::Fractional, Rule::Small,   Rule::Large,
    Rule::Threshold, Rule::Reverse, Rule::TwoTriangle,
};

/// Balanced rules that never exceed the VCG discount and always pay out the
/// full surplus; their summed regret is Sum(Delta_vcg) - V* on every instance.
inline constexpr Rule kCappedFullAllocationRules[] = {
    Rule::Fractional, Rule::Small, Rule::Large, Rule::Threshold, Rule::Reverse, Rule::TwoTriangle,
};

std::string rule_name(Rule rule);

/// One-letter display label ("T", "S", ..., "W" for Two Triangle).
std::string rule_letter(Rule rule);

/// Accepts full names ("threshold", "two_triangle") and letters ("T", "W").
std::optional<Rule> parse_rule(const std::string& text);

struct DiscountVector {
  Eigen::VectorXd discounts;
  /// Set when Sum(Delta_vcg) < V* forced a residual equal split on a capped
  /// rule; budget balance still holds but caps do not.
  bool residual_flagged = false;
};

/// Splits the available surplus V* among the trading agents according to the
/// rule, given the VCG discounts. Throws std::invalid_argument on negative
/// inputs. All seven balanced rules return discounts summing to V*.
DiscountVector allocate_discounts(Rule rule, const Eigen::VectorXd& vcg_discounts,
                                  const std::vector<int>& trading, double surplus);

/// p_i = reported value of the assigned trade minus the discount.
Eigen::VectorXd payments_from_discounts(std::span<const XorValuation> reports,
                                        const TradeProfile& profile,
                                        const Eigen::VectorXd& discounts);

/// regret_i = Delta_vcg,i - Delta_i.
Eigen::VectorXd regrets(const Eigen::VectorXd& vcg_discounts, const Eigen::VectorXd& discounts);

}  // namespace mechforge
