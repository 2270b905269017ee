// End-to-end checks of the command-line surface: exit codes, file naming,
// round trips. Takes the CLI path as argv[1].

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mechforge/market.hpp"

namespace fs = std::filesystem;

namespace {

int failures = 0;

void expect(bool ok, const std::string& what) {
  if (!ok) {
    ++failures;
    std::cerr << "FAIL: " << what << "\n";
  }
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int run(const std::string& cmd) {
  int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(rc);
}

std::vector<std::string> csv_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  }
  return lines;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: test_cli <mechforge binary>\n";
    return 1;
  }
  const std::string cli = argv[1];
  const fs::path base = fs::temp_directory_path() / "mechforge_cli_test";
  fs::remove_all(base);
  fs::create_directories(base);
  const std::string out = " --out-dir " + (base / "out").string();

  // exit codes: unknown flag and missing config file are config errors
  expect(run(cli + " metrics --no-such-flag" + out) == 2, "unknown flag exits 2");
  expect(run(cli + " study --config " + (base / "missing.json").string() + out) == 2,
         "missing config exits 2");
  expect(run(cli + " gen --scenario cats" + out) == 2, "unknown scenario exits 2");
  expect(run(cli) == 2, "no subcommand exits 2");

  // gen: named files, valid and bit-exact through the parser
  expect(run(cli + " gen --scenario decay --count 3 --seed 11" + out + " --emit-lp") == 0,
         "gen succeeds");
  for (int seed = 11; seed <= 13; ++seed) {
    fs::path file = base / "out" / ("decay_" + std::to_string(seed) + ".json");
    expect(fs::exists(file), "gen wrote " + file.filename().string());
    std::string text = slurp(file);
    mechforge::Instance instance = mechforge::instance_from_json(text);
    expect(mechforge::to_json(instance) == text, "instance json round-trips");
    expect(fs::exists(base / "out" / ("decay_" + std::to_string(seed) + ".lp")),
           "gen wrote the LP export");
  }
  expect(fs::exists(base / "out" / "manifest.json"), "gen wrote a manifest");

  // metrics --rule T: exactly one row, for threshold
  expect(run(cli + " metrics --rule T --scenario super --instances 60 --seed 2" + out) == 0,
         "metrics succeeds");
  {
    auto lines = csv_lines(base / "out" / "metrics.csv");
    expect(lines.size() == 2, "metrics --rule T emits one data row");
    expect(lines[1].rfind("threshold,", 0) == 0, "the row is threshold");
    expect(slurp(base / "out" / "metrics.csv").rfind("# config_hash=", 0) == 0,
           "metrics csv carries the manifest hash");
  }

  // dump-samples produces the per-agent sample file
  expect(run(cli + " metrics --rule S --scenario super --instances 40 --seed 2 --dump-samples" +
             out) == 0,
         "metrics --dump-samples succeeds");
  expect(fs::exists(base / "out" / "fig3_samples.csv"), "fig3 samples written");

  // fit emits parameter and curve files
  expect(run(cli + " fit --scenario super --instances 120 --seed 3" + out) == 0, "fit succeeds");
  for (const char* name : {"fit_params.csv", "fig1_surplus.csv", "fig1_marginal.csv",
                           "fig2_payoff.csv"}) {
    expect(fs::exists(base / "out" / name), std::string("fit wrote ") + name);
  }

  // deviation emits one file per variant with one column per rule
  expect(run(cli + " deviation --scenario super --instances 40 --seed 4" + out) == 0,
         "deviation succeeds");
  {
    auto lines = csv_lines(base / "out" / "fig5_expected.csv");
    expect(!lines.empty() && lines[0] ==
               "rho,vcg,no_discount,equal,fractional,small,large,threshold,reverse,two_triangle",
           "deviation header lists every rule");
    expect(fs::exists(base / "out" / "fig4_single.csv"), "fig4 written");
    expect(fs::exists(base / "out" / "fig6_conditional_gain.csv"), "fig6 written");
    expect(fs::exists(base / "out" / "fig7_conditional_loss.csv"), "fig7 written");
  }

  // equilibrium csv + trace
  expect(run(cli + " equilibrium --scenario decay --rule small --classes 2 --seed 5" + out) == 0,
         "equilibrium succeeds");
  expect(fs::exists(base / "out" / "equilibrium_trace.json"), "equilibrium trace written");

  // online trace uses appendix letters
  expect(run(cli + " online --scenario decay --metric KLnorm --epochs 2 --epoch-size 20 "
                   "--classes 1 --seed 6" +
             out) == 0,
         "online succeeds");
  {
    auto lines = csv_lines(base / "out" / "fig8_online.csv");
    expect(lines.size() == 3, "online trace has one row per epoch");
    expect(lines[1].rfind("0,N,", 0) == 0, "search starts at No Discount (letter N)");
  }

  // correlate in both modes, including reading a hash-stamped csv
  expect(run(cli + " correlate --n 54 --r -0.3814" + out) == 0, "correlate direct mode");
  {
    std::string text = slurp(base / "out" / "correlate.csv");
    expect(text.find("0.0044") != std::string::npos, "correlate reproduces the p-value");
  }
  {
    std::ofstream f(base / "xy.csv");
    f << "# config_hash=0\nx,y\n1,2\n2,4\n3,6.5\n4,8\n";
  }
  expect(run(cli + " correlate --input " + (base / "xy.csv").string() + " --x x --y y" + out) == 0,
         "correlate csv mode");

  fs::remove_all(base);
  if (failures == 0) {
    std::cout << "test_cli: all checks passed\n";
    return 0;
  }
  std::cerr << "test_cli: " << failures << " failures\n";
  return 1;
}
