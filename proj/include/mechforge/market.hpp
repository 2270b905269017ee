#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mechforge {

enum class Role { Buyer, Seller };

/// One (trade, value) pair of an XOR valuation. The trade vector holds one
/// signed integer per good: positive entries are units transferred to the
/// agent, negative entries units transferred away.
struct Atom {
  Eigen::VectorXi trade;
  double value = 0.0;
};

/// XOR bid language: at most one atom executes, the null trade has value 0.
/// Buyer atoms carry strictly positive values, seller atoms strictly negative
/// reserve values, and all atoms of one valuation have distinct trade vectors.
struct XorValuation {
  Role role = Role::Buyer;
  std::vector<Atom> atoms;
};

struct Agent {
  int id = 0;
  Role role = Role::Buyer;
  std::vector<int> goods;  // endowment (seller) or demand set (buyer), sorted
  XorValuation valuation;
};

struct Instance {
  int n_goods = 0;
  std::vector<Agent> agents;
  std::uint64_t seed = 0;
  std::string generator;
};

/// Per-agent choice of one atom index, or kNull for the null trade.
struct TradeProfile {
  static constexpr int kNull = -1;

  std::vector<int> assignment;

  bool is_null(int agent) const { return assignment[agent] == kNull; }
};

/// Value of a trade under an XOR valuation: 0 for the null trade, the atom
/// value for a listed trade. Throws std::invalid_argument for any other trade.
double value_of(const XorValuation& valuation, const Eigen::VectorXi* trade);

/// Value of the atom an agent is assigned in a profile (0 when null).
double assigned_value(const XorValuation& valuation, int atom_index);

/// Supply covers demand with free disposal: per-good net flow <= 0.
bool feasible(const Instance& instance, const TradeProfile& profile);

/// Sum of reported values of the assigned atoms, accumulated in agent order.
double total_value(const TradeProfile& profile, std::span<const XorValuation> valuations);

/// Agents assigned a nonzero trade in the profile.
std::vector<int> trading_agents(const TradeProfile& profile, std::span<const XorValuation> valuations);

/// The agents' own valuations, in id order, for truthful evaluation.
std::vector<XorValuation> truthful_reports(const Instance& instance);

/// Checks the structural invariants (role signs, distinct atoms, endowment
/// coverage, id numbering). Throws std::invalid_argument on violation.
void validate_instance(const Instance& instance);

std::string to_json(const Instance& instance);
Instance instance_from_json(const std::string& text);

}  // namespace mechforge
