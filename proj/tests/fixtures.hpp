#pragma once

#include <utility>
#include <vector>

#include "mechforge/market.hpp"

namespace mechforge::testing {

inline Eigen::VectorXi trade2(int a, int b) {
  Eigen::VectorXi t(2);
  t << a, b;
  return t;
}

// Two goods; one seller offering the pair at reserve -4, one buyer wanting
// the pair at 10, one buyer wanting the first good at 3.
inline Instance fixture_a() {
  Instance instance;
  instance.n_goods = 2;
  instance.generator = "fixture";

  Agent s1;
  s1.id = 0;
  s1.role = Role::Seller;
  s1.goods = {0, 1};
  s1.valuation.role = Role::Seller;
  s1.valuation.atoms.push_back(Atom{trade2(-1, -1), -4.0});

  Agent b1;
  b1.id = 1;
  b1.role = Role::Buyer;
  b1.goods = {0, 1};
  b1.valuation.role = Role::Buyer;
  b1.valuation.atoms.push_back(Atom{trade2(1, 1), 10.0});

  Agent b2;
  b2.id = 2;
  b2.role = Role::Buyer;
  b2.goods = {0};
  b2.valuation.role = Role::Buyer;
  b2.valuation.atoms.push_back(Atom{trade2(1, 0), 3.0});

  instance.agents = {s1, b1, b2};
  return instance;
}

// Exhaustive winner-determination oracle: odometer over all atom/null
// assignments in lexicographic order, feasibility by per-good net flow,
// value accumulated in agent id order, strictly-better replacement. Shares
// no code with the branch-and-bound solver.
inline std::pair<TradeProfile, double> enumerate_efficient(
    int n_goods, const std::vector<XorValuation>& reports) {
  const std::size_t n = reports.size();
  std::vector<int> assignment(n, TradeProfile::kNull);
  TradeProfile best;
  best.assignment = assignment;
  double best_value = 0.0;
  bool first = true;
  while (true) {
    Eigen::VectorXi net = Eigen::VectorXi::Zero(n_goods);
    double value = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (assignment[i] == TradeProfile::kNull) continue;
      const Atom& atom = reports[i].atoms[static_cast<std::size_t>(assignment[i])];
      net += atom.trade;
      value += atom.value;
    }
    if ((net.array() <= 0).all() && (first || value > best_value)) {
      best.assignment = assignment;
      best_value = value;
      first = false;
    }
    // Odometer increment, last agent fastest so visiting order is
    // lexicographic in (agents in id order, null < atom 0 < atom 1 ...).
    std::size_t pos = n;
    while (pos-- > 0) {
      if (assignment[pos] + 1 < static_cast<int>(reports[pos].atoms.size())) {
        ++assignment[pos];
        break;
      }
      assignment[pos] = TradeProfile::kNull;
      if (pos == 0) return {best, best_value};
    }
    if (n == 0) return {best, best_value};
  }
}

}  // namespace mechforge::testing
