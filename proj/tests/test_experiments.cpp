#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mechforge/experiments.hpp"

using namespace mechforge;
namespace fs = std::filesystem;

namespace {

ExperimentConfig micro_config() {
  ExperimentConfig config = default_config();
  for (Scenario scenario : kAllScenarios) {
    GeneratorConfig& g = config.generators[scenario];
    g.n_goods = 4;
    g.n_sellers = 2;
    g.n_buyers = 2;
    g.atoms_per_agent = 2;
  }
  config.equilibrium.instances_per_iteration = 8;
  config.equilibrium.max_iterations = 3;
  config.metric_instances = 30;
  config.measure_instances = 30;
  config.seed = 5;
  return config;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("config json round-trips through its canonical form") {
  ExperimentConfig config = default_config();
  std::string text = config_to_json(config);
  ExperimentConfig back = config_from_json(text);
  CHECK(config_to_json(back) == text);
  CHECK(config_hash(back) == config_hash(config));

  ExperimentConfig changed = config_from_json(R"({"seed": 9, "metrics": {"n_bins": 25}})");
  CHECK(changed.seed == 9);
  CHECK(changed.kl.n_bins == 25);
  CHECK(config_hash(changed) != config_hash(config));
}

TEST_CASE("partial generator overrides keep remaining defaults") {
  ExperimentConfig config = config_from_json(
      R"({"generators": {"super": {"gamma": 2.5, "n_goods": 4, "n_sellers": 2, "endowment_size": 2}}})");
  CHECK(config.generator(Scenario::Super).gamma == 2.5);
  CHECK(config.generator(Scenario::Super).n_goods == 4);
  CHECK(config.generator(Scenario::Decay).n_goods == 6);  // untouched
  CHECK_THROWS(config_from_json(R"({"generators": {"super": {"gamma": 0.5}}})"));
}

TEST_CASE("csv writer emits header plus rows") {
  CsvTable t;
  t.comment = "config_hash=deadbeef";
  t.header = {"a", "b"};
  t.rows = {{"1", "2"}, {"x", format_double(0.5)}};
  fs::path dir = fs::temp_directory_path() / "mechforge_csv_test";
  fs::create_directories(dir);
  t.write(dir / "t.csv");
  CHECK(slurp(dir / "t.csv") == "# config_hash=deadbeef\na,b\n1,2\nx,0.5\n");
  fs::remove_all(dir);
}

TEST_CASE("micro study produces 54 conditions and consistent tables") {
  ExperimentConfig config = micro_config();
  StudyResult result = run_study(config);
  CHECK(result.conditions.size() == 54);

  // full-allocation structure: the at-truth L1norm column is constant across the
  // capped full-allocation rules within each scenario.
  for (Scenario scenario : kAllScenarios) {
    const auto& table = result.truth_tables.at(scenario);
    double l1norm = -1.0;
    for (std::size_t r = 0; r < 6; ++r) {  // first six kTableRules are capped
      if (l1norm < 0.0) {
        l1norm = table[r].values[3];
      } else {
        CHECK(table[r].values[3] == doctest::Approx(l1norm).epsilon(1e-9));
      }
    }
  }

  for (const CorrelationReport& c : result.correlations) {
    CHECK(c.n <= 54);
    if (c.defined) {
      CHECK(std::abs(c.r) <= 1.0 + 1e-12);
      CHECK(c.p >= 0.0);
      CHECK(c.p <= 1.0);
    }
  }

  fs::path dir_a = fs::temp_directory_path() / "mechforge_study_a";
  fs::path dir_b = fs::temp_directory_path() / "mechforge_study_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  write_study_outputs(result, config, dir_a);

  // Re-running the whole study reproduces every file byte for byte.
  StudyResult again = run_study(config);
  write_study_outputs(again, config, dir_b);
  for (const char* name : {"table1.csv", "table2.csv", "table3.csv", "table4.csv", "table5.csv"}) {
    CAPTURE(name);
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
  }
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("manifest captures seed and config hash") {
  ExperimentConfig config = micro_config();
  fs::path dir = fs::temp_directory_path() / "mechforge_manifest_test";
  fs::remove_all(dir);
  write_manifest(dir, "mechforge study", config, {"table1.csv"});
  std::string text = slurp(dir / "manifest.json");
  CHECK(text.find("\"seed\": 5") != std::string::npos);
  CHECK(text.find("config_hash") != std::string::npos);
  CHECK(text.find("mechforge study") != std::string::npos);
  fs::remove_all(dir);
}
