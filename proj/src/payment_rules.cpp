#include "mechforge/payment_rules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mechforge {

std::string rule_name(Rule rule) {
  switch (rule) {
    case Rule::Vcg: return "vcg";
    case Rule::NoDiscount: return "no_discount";
    case Rule::Equal: return "equal";
    case Rule::Fractional: return "fractional";
    case Rule::Small: return "small";
    case Rule::Large: return "large";
    case Rule::Threshold: return "threshold";
    case Rule::Reverse: return "reverse";
    case Rule::TwoTriangle: return "two_triangle";
  }
  return "?";
}

std::string rule_letter(Rule rule) {
  switch (rule) {
    case Rule::Vcg: return "VCG";
    case Rule::NoDiscount: return "N";
    case Rule::Equal: return "E";
    case Rule::Fractional: return "F";
    case Rule::Small: return "S";
    case Rule::Large: return "L";
    case Rule::Threshold: return "T";
    case Rule::Reverse: return "R";
    case Rule::TwoTriangle: return "W";
  }
  return "?";
}

std::optional<Rule> parse_rule(const std::string& text) {
  std::string t;
  for (char c : text) {
    if (c == '-' || c == ' ') c = '_';
    t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  for (Rule rule : kAllRules) {
    if (t == rule_name(rule)) return rule;
  }
  if (t == "nodiscount") return Rule::NoDiscount;
  if (t == "twotriangle") return Rule::TwoTriangle;
  if (text.size() <= 3) {
    std::string upper;
    for (char c : text) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (Rule rule : kAllRules) {
      if (upper == rule_letter(rule)) return rule;
    }
  }
  return std::nullopt;
}

namespace {

// Agents eligible for a positive discount, stable order by ascending or
// descending VCG discount with ties broken by ascending agent id.
std::vector<int> ordered_by_discount(const Eigen::VectorXd& vcg, const std::vector<int>& trading,
                                     bool ascending) {
  std::vector<int> order = trading;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (vcg[a] != vcg[b]) return ascending ? vcg[a] < vcg[b] : vcg[a] > vcg[b];
    return a < b;
  });
  return order;
}

// Water-fill `budget` over agents in `order`, each capped at caps[i].
void water_fill(const std::vector<int>& order, const Eigen::VectorXd& caps, double budget,
                Eigen::VectorXd& out) {
  for (int i : order) {
    if (budget <= 0.0) break;
    double take = std::min(caps[i], budget);
    if (take <= 0.0) continue;
    out[i] += take;
    budget -= take;
  }
}

// Exact C >= 0 with Sum_i max(0, d_i - C) = budget, by walking the piecewise
// linear segments of the sorted discounts. Requires Sum d_i >= budget.
double threshold_constant(std::vector<double> d, double budget) {
  std::sort(d.begin(), d.end(), std::greater<>());
  double prefix = 0.0;
  for (std::size_t k = 1; k <= d.size(); ++k) {
    prefix += d[k - 1];
    double c = (prefix - budget) / static_cast<double>(k);
    double lo = (k < d.size()) ? d[k] : 0.0;
    if (c >= lo - 1e-12 && c <= d[k - 1] + 1e-12) return std::max(c, 0.0);
  }
  // Degenerate segment boundaries; bisect the monotone shortfall instead.
  auto shortfall = [&](double c) {
    double s = 0.0;
    for (double x : d) s += std::max(0.0, x - c);
    return s - budget;
  };
  double lo = 0.0, hi = d.front();
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
    double mid = 0.5 * (lo + hi);
    (shortfall(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Eigen::VectorXd threshold_allocate(const Eigen::VectorXd& vcg, const std::vector<int>& trading,
                                   double budget) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(vcg.size());
  std::vector<double> d;
  for (int i : trading) {
    if (vcg[i] > 0.0) d.push_back(vcg[i]);
  }
  if (d.empty() || budget <= 0.0) return out;
  double c = threshold_constant(d, budget);
  double allocated = 0.0;
  int last = -1;
  for (int i : trading) {
    double take = std::max(0.0, vcg[i] - c);
    out[i] = take;
    allocated += take;
    if (take > 0.0) last = i;
  }
  // Absorb float residue so the balance identity is exact.
  if (last >= 0) out[last] += budget - allocated;
  return out;
}

Eigen::VectorXd reverse_allocate(const Eigen::VectorXd& vcg, const std::vector<int>& trading,
                                 double budget) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(vcg.size());
  std::vector<int> positive;
  double total = 0.0;
  double min_cap = std::numeric_limits<double>::infinity();
  for (int i : trading) {
    if (vcg[i] > 0.0) {
      positive.push_back(i);
      total += vcg[i];
      min_cap = std::min(min_cap, vcg[i]);
    }
  }
  if (positive.empty() || budget <= 0.0) return out;
  // Max-min regret: r* = min(excess / m, smallest positive discount). With
  // regrets held at >= r*, a descending water-fill on the residual caps
  // concentrates the surplus on the largest-discount agents.
  double excess = total - budget;
  double r = std::min(excess / static_cast<double>(positive.size()), min_cap);
  Eigen::VectorXd caps = Eigen::VectorXd::Zero(vcg.size());
  for (int i : positive) caps[i] = std::max(0.0, vcg[i] - r);
  water_fill(ordered_by_discount(vcg, positive, /*ascending=*/false), caps, budget, out);
  return out;
}

}  // namespace

DiscountVector allocate_discounts(Rule rule, const Eigen::VectorXd& vcg_discounts,
                                  const std::vector<int>& trading, double surplus) {
  if (surplus < 0.0) throw std::invalid_argument("allocate_discounts: negative surplus");
  if ((vcg_discounts.array() < 0.0).any()) {
    throw std::invalid_argument("allocate_discounts: negative VCG discount");
  }
  const Eigen::Index n = vcg_discounts.size();
  DiscountVector result;
  result.discounts = Eigen::VectorXd::Zero(n);

  if (rule == Rule::Vcg) {
    result.discounts = vcg_discounts;
    return result;
  }
  if (rule == Rule::NoDiscount) return result;
  if (trading.empty() || surplus == 0.0) return result;

  const double trading_total = [&] {
    double t = 0.0;
    for (int i : trading) t += vcg_discounts[i];
    return t;
  }();

  if (rule == Rule::Equal) {
    double share = surplus / static_cast<double>(trading.size());
    for (int i : trading) result.discounts[i] = share;
    return result;
  }

  // Capped rules cannot balance when the VCG discounts sum to less than the
  // surplus; allocate up to the caps and split the residue equally.
  double budget = surplus;
  double residual = 0.0;
  if (trading_total < surplus) {
    budget = trading_total;
    residual = (surplus - trading_total) / static_cast<double>(trading.size());
    result.residual_flagged = true;
  }

  switch (rule) {
    case Rule::Fractional: {
      if (trading_total <= 0.0) {
        // Degenerate: no VCG discounts to be proportional to. Fall back to an
        // equal split so the balance constraint survives.
        double share = surplus / static_cast<double>(trading.size());
        for (int i : trading) result.discounts[i] = share;
        return result;
      }
      for (int i : trading) result.discounts[i] = budget * vcg_discounts[i] / trading_total;
      break;
    }
    case Rule::Small:
      water_fill(ordered_by_discount(vcg_discounts, trading, true), vcg_discounts, budget,
                 result.discounts);
      break;
    case Rule::Large:
      water_fill(ordered_by_discount(vcg_discounts, trading, false), vcg_discounts, budget,
                 result.discounts);
      break;
    case Rule::Threshold:
      result.discounts = threshold_allocate(vcg_discounts, trading, budget);
      break;
    case Rule::Reverse:
      result.discounts = reverse_allocate(vcg_discounts, trading, budget);
      break;
    case Rule::TwoTriangle: {
      result.discounts = threshold_allocate(vcg_discounts, trading, budget / 2.0);
      Eigen::VectorXd residual_caps = (vcg_discounts - result.discounts).cwiseMax(0.0);
      water_fill(ordered_by_discount(vcg_discounts, trading, true), residual_caps, budget / 2.0,
                 result.discounts);
      break;
    }
    default:
      throw std::invalid_argument("allocate_discounts: unhandled rule");
  }
  if (residual > 0.0) {
    for (int i : trading) result.discounts[i] += residual;
  }
  return result;
}

Eigen::VectorXd payments_from_discounts(std::span<const XorValuation> reports,
                                        const TradeProfile& profile,
                                        const Eigen::VectorXd& discounts) {
  Eigen::VectorXd payments(static_cast<Eigen::Index>(reports.size()));
  for (std::size_t i = 0; i < reports.size(); ++i) {
    payments[static_cast<Eigen::Index>(i)] =
        assigned_value(reports[i], profile.assignment[i]) - discounts[static_cast<Eigen::Index>(i)];
  }
  return payments;
}

Eigen::VectorXd regrets(const Eigen::VectorXd& vcg_discounts, const Eigen::VectorXd& discounts) {
  if (vcg_discounts.size() != discounts.size()) {
    throw std::invalid_argument("regrets: mismatched lengths");
  }
  return vcg_discounts - discounts;
}

}  // namespace mechforge
