#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "mechforge/market.hpp"
#include "mechforge/rng.hpp"

namespace mechforge {

enum class Scenario { Decay, Uniform, Super };

std::string scenario_name(Scenario scenario);
Scenario scenario_from(const std::string& name);

inline constexpr std::array<Scenario, 3> kAllScenarios = {Scenario::Decay, Scenario::Uniform,
                                                          Scenario::Super};

/// Knobs for the three instance generators. Sellers partition the goods into
/// equal endowments (n_goods = n_sellers * endowment_size); buyers draw
/// demand sets of the same size.
struct GeneratorConfig {
  Scenario scenario = Scenario::Super;
  int n_goods = 6;
  int n_buyers = 3;
  int n_sellers = 3;
  int atoms_per_agent = 3;
  int endowment_size = 2;
  double common_value_lo = 0.0, common_value_hi = 1.0;    // c(g) range, Super
  double private_value_lo = 0.0, private_value_hi = 1.0;  // y_i(g) range, Super
  double beta = 0.5;         // private/common blend, Super
  double gamma = 1.5;        // superadditivity exponent, Super
  double decay_probability = 0.75;
  double v_max = 1.0;        // per-good price scale, Decay/Uniform

  void validate() const;
};

/// Pure functions of (config, seed). The scenario field of the config must
/// match the generator called; `generate` dispatches on it.
Instance gen_decay(const GeneratorConfig& config, std::uint64_t seed);
Instance gen_uniform(const GeneratorConfig& config, std::uint64_t seed);
Instance gen_super(const GeneratorConfig& config, std::uint64_t seed);
Instance generate(const GeneratorConfig& config, std::uint64_t seed);

}  // namespace mechforge
