#include "mechforge/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace mechforge {

std::string scenario_name(Scenario scenario) {
  switch (scenario) {
    case Scenario::Decay: return "decay";
    case Scenario::Uniform: return "uniform";
    case Scenario::Super: return "super";
  }
  return "?";
}

Scenario scenario_from(const std::string& name) {
  for (Scenario s : kAllScenarios) {
    if (name == scenario_name(s)) return s;
  }
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

void GeneratorConfig::validate() const {
  if (n_goods <= 0 || n_buyers <= 0 || n_sellers <= 0 || atoms_per_agent <= 0 ||
      endowment_size <= 0) {
    throw std::invalid_argument("generator config: counts must be positive");
  }
  if (n_goods != n_sellers * endowment_size) {
    throw std::invalid_argument("generator config: n_goods must equal n_sellers * endowment_size");
  }
  if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("generator config: beta outside [0,1]");
  if (gamma <= 1.0) throw std::invalid_argument("generator config: gamma must be > 1");
  if (decay_probability <= 0.0 || decay_probability >= 1.0) {
    throw std::invalid_argument("generator config: decay probability outside (0,1)");
  }
  if (common_value_lo < 0.0 || private_value_lo < 0.0 || common_value_hi < common_value_lo ||
      private_value_hi < private_value_lo || v_max <= 0.0) {
    throw std::invalid_argument("generator config: bad value range");
  }
}

namespace {

std::vector<int> shuffled_goods(int n_goods, RngStream& rng) {
  std::vector<int> goods(static_cast<std::size_t>(n_goods));
  std::iota(goods.begin(), goods.end(), 0);
  for (int i = n_goods - 1; i > 0; --i) {
    std::swap(goods[static_cast<std::size_t>(i)],
              goods[static_cast<std::size_t>(rng.next_int(0, i))]);
  }
  return goods;
}

// Sellers first (partitioned endowments), buyers after (random demand sets).
std::vector<Agent> skeleton(const GeneratorConfig& config, RngStream& rng) {
  std::vector<Agent> agents;
  std::vector<int> deck = shuffled_goods(config.n_goods, rng);
  for (int s = 0; s < config.n_sellers; ++s) {
    Agent agent;
    agent.id = s;
    agent.role = Role::Seller;
    agent.valuation.role = Role::Seller;
    auto begin = deck.begin() + static_cast<std::ptrdiff_t>(s) * config.endowment_size;
    agent.goods.assign(begin, begin + config.endowment_size);
    std::sort(agent.goods.begin(), agent.goods.end());
    agents.push_back(std::move(agent));
  }
  for (int b = 0; b < config.n_buyers; ++b) {
    Agent agent;
    agent.id = config.n_sellers + b;
    agent.role = Role::Buyer;
    agent.valuation.role = Role::Buyer;
    std::vector<int> pool = shuffled_goods(config.n_goods, rng);
    agent.goods.assign(pool.begin(), pool.begin() + config.endowment_size);
    std::sort(agent.goods.begin(), agent.goods.end());
    agents.push_back(std::move(agent));
  }
  return agents;
}

Eigen::VectorXi bundle_to_trade(const std::vector<int>& bundle, int n_goods, Role role) {
  Eigen::VectorXi trade = Eigen::VectorXi::Zero(n_goods);
  int unit = role == Role::Buyer ? 1 : -1;
  for (int g : bundle) trade[g] = unit;
  return trade;
}

// Appends an atom unless its trade vector collides with an existing one.
bool try_add_atom(Agent& agent, const std::vector<int>& bundle, double magnitude, int n_goods) {
  if (bundle.empty() || magnitude <= 0.0) return false;
  Eigen::VectorXi trade = bundle_to_trade(bundle, n_goods, agent.role);
  for (const Atom& atom : agent.valuation.atoms) {
    if (atom.trade == trade) return false;
  }
  double sign = agent.role == Role::Buyer ? 1.0 : -1.0;
  agent.valuation.atoms.push_back(Atom{std::move(trade), sign * magnitude});
  return true;
}

std::vector<int> decay_bundle(const std::vector<int>& goods, double p, RngStream& rng) {
  std::vector<int> pool = goods;
  std::vector<int> bundle;
  std::swap(pool[static_cast<std::size_t>(rng.next_int(0, static_cast<int>(pool.size()) - 1))],
            pool.back());
  bundle.push_back(pool.back());
  pool.pop_back();
  while (!pool.empty() && rng.next_bool(p)) {
    std::swap(pool[static_cast<std::size_t>(rng.next_int(0, static_cast<int>(pool.size()) - 1))],
              pool.back());
    bundle.push_back(pool.back());
    pool.pop_back();
  }
  return bundle;
}

std::vector<int> uniform_bundle(const std::vector<int>& goods, RngStream& rng) {
  int size = rng.next_int(1, static_cast<int>(goods.size()));
  std::vector<int> pool = goods;
  std::vector<int> bundle;
  for (int k = 0; k < size; ++k) {
    std::swap(pool[static_cast<std::size_t>(rng.next_int(0, static_cast<int>(pool.size()) - 1))],
              pool.back());
    bundle.push_back(pool.back());
    pool.pop_back();
  }
  return bundle;
}

template <typename BundleFn, typename PriceFn>
void fill_atoms(Agent& agent, const GeneratorConfig& config, RngStream& rng, BundleFn make_bundle,
                PriceFn price) {
  int attempts = 0;
  int limit = 40 * config.atoms_per_agent;
  while (static_cast<int>(agent.valuation.atoms.size()) < config.atoms_per_agent &&
         attempts++ < limit) {
    std::vector<int> bundle = make_bundle(agent.goods, rng);
    try_add_atom(agent, bundle, price(bundle, rng), config.n_goods);
  }
}

Instance finish(std::vector<Agent> agents, const GeneratorConfig& config, std::uint64_t seed) {
  Instance instance;
  instance.n_goods = config.n_goods;
  instance.agents = std::move(agents);
  instance.seed = seed;
  instance.generator = scenario_name(config.scenario);
  validate_instance(instance);
  return instance;
}

}  // namespace

Instance gen_decay(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  if (config.scenario != Scenario::Decay) throw std::invalid_argument("gen_decay: wrong scenario");
  RngStream rng = RngStream(seed).derive("gen/decay");
  std::vector<Agent> agents = skeleton(config, rng);
  for (Agent& agent : agents) {
    fill_atoms(
        agent, config, rng,
        [&](const std::vector<int>& goods, RngStream& r) {
          return decay_bundle(goods, config.decay_probability, r);
        },
        [&](const std::vector<int>& bundle, RngStream& r) {
          return static_cast<double>(bundle.size()) * r.next_double(0.0, config.v_max);
        });
  }
  return finish(std::move(agents), config, seed);
}

Instance gen_uniform(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  if (config.scenario != Scenario::Uniform) {
    throw std::invalid_argument("gen_uniform: wrong scenario");
  }
  RngStream rng = RngStream(seed).derive("gen/uniform");
  std::vector<Agent> agents = skeleton(config, rng);
  for (Agent& agent : agents) {
    fill_atoms(agent, config, rng,
               [](const std::vector<int>& goods, RngStream& r) { return uniform_bundle(goods, r); },
               [&](const std::vector<int>& bundle, RngStream& r) {
                 return r.next_double(0.0, static_cast<double>(bundle.size()) * config.v_max);
               });
  }
  return finish(std::move(agents), config, seed);
}

Instance gen_super(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  if (config.scenario != Scenario::Super) throw std::invalid_argument("gen_super: wrong scenario");
  RngStream rng = RngStream(seed).derive("gen/super");
  std::vector<Agent> agents = skeleton(config, rng);
  Eigen::VectorXd common(config.n_goods);
  for (int g = 0; g < config.n_goods; ++g) {
    common[g] = rng.next_double(config.common_value_lo, config.common_value_hi);
  }
  for (Agent& agent : agents) {
    Eigen::VectorXd weight = Eigen::VectorXd::Zero(config.n_goods);
    for (int g : agent.goods) {
      double y = rng.next_double(config.private_value_lo, config.private_value_hi);
      weight[g] = config.beta * y + (1.0 - config.beta) * common[g];
    }
    auto price = [&](const std::vector<int>& bundle, RngStream&) {
      double sum = 0.0;
      for (int g : bundle) sum += weight[g];
      return std::pow(sum, config.gamma);
    };
    // The full set G_i is always bid; remaining atoms are random subsets.
    try_add_atom(agent, agent.goods, price(agent.goods, rng), config.n_goods);
    fill_atoms(agent, config, rng,
               [](const std::vector<int>& goods, RngStream& r) {
                 std::vector<int> bundle;
                 for (int g : goods) {
                   if (r.next_bool(0.5)) bundle.push_back(g);
                 }
                 return bundle;
               },
               price);
  }
  return finish(std::move(agents), config, seed);
}

Instance generate(const GeneratorConfig& config, std::uint64_t seed) {
  switch (config.scenario) {
    case Scenario::Decay: return gen_decay(config, seed);
    case Scenario::Uniform: return gen_uniform(config, seed);
    case Scenario::Super: return gen_super(config, seed);
  }
  throw std::invalid_argument("generate: bad scenario");
}

}  // namespace mechforge
