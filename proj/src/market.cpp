#include "mechforge/market.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>
#include <stdexcept>

namespace mechforge {

double value_of(const XorValuation& valuation, const Eigen::VectorXi* trade) {
  if (trade == nullptr || trade->isZero()) return 0.0;
  for (const Atom& atom : valuation.atoms) {
    if (atom.trade == *trade) return atom.value;
  }
  throw std::invalid_argument("value_of: trade is neither null nor one of the valuation's atoms");
}

double assigned_value(const XorValuation& valuation, int atom_index) {
  if (atom_index == TradeProfile::kNull) return 0.0;
  return valuation.atoms.at(static_cast<std::size_t>(atom_index)).value;
}

bool feasible(const Instance& instance, const TradeProfile& profile) {
  Eigen::VectorXi net = Eigen::VectorXi::Zero(instance.n_goods);
  for (std::size_t i = 0; i < instance.agents.size(); ++i) {
    int a = profile.assignment[i];
    if (a == TradeProfile::kNull) continue;
    net += instance.agents[i].valuation.atoms.at(static_cast<std::size_t>(a)).trade;
  }
  return (net.array() <= 0).all();
}

double total_value(const TradeProfile& profile, std::span<const XorValuation> valuations) {
  double total = 0.0;
  for (std::size_t i = 0; i < valuations.size(); ++i) {
    total += assigned_value(valuations[i], profile.assignment[i]);
  }
  return total;
}

std::vector<int> trading_agents(const TradeProfile& profile, std::span<const XorValuation> valuations) {
  std::vector<int> out;
  for (std::size_t i = 0; i < valuations.size(); ++i) {
    int a = profile.assignment[i];
    if (a == TradeProfile::kNull) continue;
    if (!valuations[i].atoms[static_cast<std::size_t>(a)].trade.isZero()) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

std::vector<XorValuation> truthful_reports(const Instance& instance) {
  std::vector<XorValuation> reports;
  reports.reserve(instance.agents.size());
  for (const Agent& agent : instance.agents) reports.push_back(agent.valuation);
  return reports;
}

void validate_instance(const Instance& instance) {
  if (instance.n_goods <= 0) throw std::invalid_argument("instance: n_goods must be positive");
  for (std::size_t i = 0; i < instance.agents.size(); ++i) {
    const Agent& agent = instance.agents[i];
    if (agent.id != static_cast<int>(i)) {
      throw std::invalid_argument("instance: agent ids must be 0..n-1 in order");
    }
    if (agent.role != agent.valuation.role) {
      throw std::invalid_argument("instance: agent and valuation roles disagree");
    }
    std::set<std::vector<int>> seen;
    for (const Atom& atom : agent.valuation.atoms) {
      if (atom.trade.size() != instance.n_goods) {
        throw std::invalid_argument("instance: atom trade vector has wrong dimension");
      }
      if (atom.trade.isZero()) throw std::invalid_argument("instance: atom equals the null trade");
      if (agent.role == Role::Buyer) {
        if (atom.value <= 0.0) throw std::invalid_argument("instance: buyer atom value must be > 0");
        if ((atom.trade.array() < 0).any()) {
          throw std::invalid_argument("instance: buyer atom has negative entries");
        }
      } else {
        if (atom.value >= 0.0) throw std::invalid_argument("instance: seller atom value must be < 0");
        if ((atom.trade.array() > 0).any()) {
          throw std::invalid_argument("instance: seller atom has positive entries");
        }
      }
      for (int g = 0; g < instance.n_goods; ++g) {
        if (atom.trade[g] != 0 &&
            !std::binary_search(agent.goods.begin(), agent.goods.end(), g)) {
          throw std::invalid_argument("instance: atom touches a good outside the agent's set");
        }
      }
      std::vector<int> key(atom.trade.data(), atom.trade.data() + atom.trade.size());
      if (!seen.insert(key).second) {
        throw std::invalid_argument("instance: duplicate atom trade vector");
      }
    }
  }
}

namespace {

const char* role_name(Role role) { return role == Role::Buyer ? "buyer" : "seller"; }

Role role_from(const std::string& name) {
  if (name == "buyer") return Role::Buyer;
  if (name == "seller") return Role::Seller;
  throw std::invalid_argument("instance json: unknown role '" + name + "'");
}

}  // namespace

std::string to_json(const Instance& instance) {
  nlohmann::json j;
  j["goods"] = instance.n_goods;
  j["seed"] = instance.seed;
  j["generator"] = instance.generator;
  nlohmann::json agents = nlohmann::json::array();
  for (const Agent& agent : instance.agents) {
    nlohmann::json a;
    a["id"] = agent.id;
    a["role"] = role_name(agent.role);
    a["demand_set"] = agent.goods;
    nlohmann::json atoms = nlohmann::json::array();
    for (const Atom& atom : agent.valuation.atoms) {
      nlohmann::json entry;
      entry["trade"] = std::vector<int>(atom.trade.data(), atom.trade.data() + atom.trade.size());
      entry["value"] = atom.value;
      atoms.push_back(std::move(entry));
    }
    a["atoms"] = std::move(atoms);
    agents.push_back(std::move(a));
  }
  j["agents"] = std::move(agents);
  return j.dump(2);
}

Instance instance_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Instance instance;
  instance.n_goods = j.at("goods").get<int>();
  instance.seed = j.at("seed").get<std::uint64_t>();
  instance.generator = j.at("generator").get<std::string>();
  for (const auto& a : j.at("agents")) {
    Agent agent;
    agent.id = a.at("id").get<int>();
    agent.role = role_from(a.at("role").get<std::string>());
    agent.goods = a.at("demand_set").get<std::vector<int>>();
    agent.valuation.role = agent.role;
    for (const auto& entry : a.at("atoms")) {
      Atom atom;
      auto trade = entry.at("trade").get<std::vector<int>>();
      atom.trade = Eigen::Map<const Eigen::VectorXi>(trade.data(), static_cast<Eigen::Index>(trade.size()));
      atom.value = entry.at("value").get<double>();
      agent.valuation.atoms.push_back(std::move(atom));
    }
    instance.agents.push_back(std::move(agent));
  }
  validate_instance(instance);
  return instance;
}

}  // namespace mechforge
