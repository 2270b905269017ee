#include "mechforge/winner.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <vector>

namespace mechforge {

namespace {

// Pruning slack. Bounds are evaluated in floating point; the slack keeps
// rounding in the running sums from ever pruning the float-optimal branch,
// so the result matches exhaustive enumeration bitwise.
constexpr double kBoundSlack = 1e-9;

struct SearchState {
  int n_goods = 0;
  std::span<const XorValuation> reports;
  std::vector<int> agent_ids;          // agents taking part, id order
  std::vector<double> value_bound;     // suffix sum of max(0, best atom value)
  Eigen::MatrixXi min_future;          // per good: suffix sum of min(0, min atom entry)
  Eigen::VectorXi net;
  std::vector<int> choice;
  std::vector<int> best_choice;
  double best_value = 0.0;
  bool found = false;

  void dfs(std::size_t depth, double value_so_far) {
    if (depth == agent_ids.size()) {
      if (!found || value_so_far > best_value) {
        best_value = value_so_far;
        best_choice = choice;
        found = true;
      }
      return;
    }
    if (found && value_so_far + value_bound[depth] < best_value - kBoundSlack) return;
    for (int g = 0; g < n_goods; ++g) {
      if (net[g] + min_future(g, static_cast<Eigen::Index>(depth)) > 0) return;
    }
    const XorValuation& val = reports[static_cast<std::size_t>(agent_ids[depth])];
    // Null first: DFS visits assignments in lexicographic order, so the
    // first profile attaining the maximum is the lexicographically smallest.
    choice[depth] = TradeProfile::kNull;
    dfs(depth + 1, value_so_far);
    for (std::size_t a = 0; a < val.atoms.size(); ++a) {
      const Atom& atom = val.atoms[a];
      bool ok = true;
      for (int g = 0; g < n_goods && ok; ++g) {
        // A good oversupplied now may still be demanded later; only reject
        // when no future agent can absorb the excess.
        if (net[g] + atom.trade[g] + min_future(g, static_cast<Eigen::Index>(depth) + 1) > 0) ok = false;
      }
      if (!ok) continue;
      net += atom.trade;
      choice[depth] = static_cast<int>(a);
      dfs(depth + 1, value_so_far + atom.value);
      net -= atom.trade;
    }
    choice[depth] = TradeProfile::kNull;
  }
};

std::pair<TradeProfile, double> solve(int n_goods, std::span<const XorValuation> reports,
                                      int excluded_agent) {
  SearchState s;
  s.n_goods = n_goods;
  s.reports = reports;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (static_cast<int>(i) != excluded_agent) s.agent_ids.push_back(static_cast<int>(i));
  }
  const std::size_t m = s.agent_ids.size();
  s.value_bound.assign(m + 1, 0.0);
  s.min_future = Eigen::MatrixXi::Zero(n_goods, static_cast<Eigen::Index>(m) + 1);
  for (std::size_t d = m; d-- > 0;) {
    const XorValuation& val = reports[static_cast<std::size_t>(s.agent_ids[d])];
    double best = 0.0;
    Eigen::VectorXi min_entry = Eigen::VectorXi::Zero(n_goods);
    for (const Atom& atom : val.atoms) {
      best = std::max(best, atom.value);
      min_entry = min_entry.cwiseMin(atom.trade);
    }
    s.value_bound[d] = s.value_bound[d + 1] + best;
    s.min_future.col(static_cast<Eigen::Index>(d)) =
        s.min_future.col(static_cast<Eigen::Index>(d) + 1) + min_entry;
  }
  s.net = Eigen::VectorXi::Zero(n_goods);
  s.choice.assign(m, TradeProfile::kNull);
  s.dfs(0, 0.0);

  TradeProfile profile;
  profile.assignment.assign(reports.size(), TradeProfile::kNull);
  for (std::size_t d = 0; d < m; ++d) {
    profile.assignment[static_cast<std::size_t>(s.agent_ids[d])] = s.best_choice[d];
  }
  return {std::move(profile), s.best_value};
}

}  // namespace

std::pair<TradeProfile, double> efficient_trade(int n_goods, std::span<const XorValuation> reports) {
  return solve(n_goods, reports, -1);
}

Eigen::VectorXd marginal_surpluses(int n_goods, std::span<const XorValuation> reports) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(reports.size()));
  for (std::size_t i = 0; i < reports.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = solve(n_goods, reports, static_cast<int>(i)).second;
  }
  return out;
}

Eigen::VectorXd vcg_discounts(double surplus, const Eigen::VectorXd& marginal) {
  return (surplus - marginal.array()).max(0.0);
}

Eigen::VectorXd vcg_payments(std::span<const XorValuation> reports, const TradeProfile& profile,
                             const Eigen::VectorXd& discounts) {
  Eigen::VectorXd payments(static_cast<Eigen::Index>(reports.size()));
  for (std::size_t i = 0; i < reports.size(); ++i) {
    payments[static_cast<Eigen::Index>(i)] =
        assigned_value(reports[i], profile.assignment[i]) - discounts[static_cast<Eigen::Index>(i)];
  }
  return payments;
}

WdResult solve_vcg(int n_goods, std::span<const XorValuation> reports) {
  WdResult result;
  std::tie(result.profile, result.surplus) = efficient_trade(n_goods, reports);
  result.marginal = marginal_surpluses(n_goods, reports);
  result.vcg_discounts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(reports.size()));
  for (std::size_t i = 0; i < reports.size(); ++i) {
    // Null traders keep a zero discount; removing them cannot change V*.
    if (result.profile.assignment[i] == TradeProfile::kNull) continue;
    result.vcg_discounts[static_cast<Eigen::Index>(i)] =
        std::max(0.0, result.surplus - result.marginal[static_cast<Eigen::Index>(i)]);
  }
  return result;
}

std::string winner_lp_text(int n_goods, std::span<const XorValuation> reports) {
  std::ostringstream lp;
  lp << "\\ winner determination: one XOR atom or the null trade per agent\n";
  lp << "Maximize\n obj:";
  char buf[64];
  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (std::size_t a = 0; a < reports[i].atoms.size(); ++a) {
      double v = reports[i].atoms[a].value;
      std::snprintf(buf, sizeof buf, " %+.17g x_%zu_%zu", v, i, a);
      lp << buf;
    }
  }
  lp << "\nSubject To\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    lp << " xor_" << i << ":";
    for (std::size_t a = 0; a < reports[i].atoms.size(); ++a) lp << " + x_" << i << "_" << a;
    lp << " <= 1\n";
  }
  for (int g = 0; g < n_goods; ++g) {
    lp << " good_" << g << ":";
    bool any = false;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      for (std::size_t a = 0; a < reports[i].atoms.size(); ++a) {
        int q = reports[i].atoms[a].trade[g];
        if (q == 0) continue;
        lp << " " << (q > 0 ? "+" : "-") << " " << std::abs(q) << " x_" << i << "_" << a;
        any = true;
      }
    }
    if (!any) lp << " 0 x_0_0";
    lp << " <= 0\n";
  }
  lp << "Binary\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (std::size_t a = 0; a < reports[i].atoms.size(); ++a) lp << " x_" << i << "_" << a << "\n";
  }
  lp << "End\n";
  return lp.str();
}

}  // namespace mechforge
