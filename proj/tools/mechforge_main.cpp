#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "mechforge/deviation.hpp"
#include "mechforge/equilibrium.hpp"
#include "mechforge/experiments.hpp"
#include "mechforge/fitting.hpp"
#include "mechforge/generators.hpp"
#include "mechforge/market.hpp"
#include "mechforge/metrics.hpp"
#include "mechforge/online.hpp"
#include "mechforge/parallel.hpp"
#include "mechforge/rng.hpp"
#include "mechforge/stats.hpp"
#include "mechforge/winner.hpp"

namespace fs = std::filesystem;
using namespace mechforge;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

ExperimentConfig load_config(const CommonArgs& args) {
  ExperimentConfig config = default_config();
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + args.config_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    config = config_from_json(buffer.str());
  }
  if (args.seed_set) config.seed = args.seed;
  return config;
}

std::string join_argv(int argc, char** argv) {
  std::string cmd;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) cmd += ' ';
    cmd += argv[i];
  }
  return cmd;
}

Rule rule_or_throw(const std::string& text) {
  auto rule = parse_rule(text);
  if (!rule) throw CLI::ValidationError("--rule", "unknown rule '" + text + "'");
  return *rule;
}

std::vector<Rule> parse_rules(const std::vector<std::string>& texts) {
  std::vector<Rule> rules;
  if (texts.empty() || (texts.size() == 1 && texts[0] == "all")) {
    rules.assign(std::begin(kTableRules), std::end(kTableRules));
    return rules;
  }
  for (const std::string& t : texts) rules.push_back(rule_or_throw(t));
  return rules;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// ---------------------------------------------------------------- gen

int cmd_gen(const CommonArgs& common, const std::string& scenario, int count, bool emit_lp,
            const std::string& command) {
  ExperimentConfig config = load_config(common);
  const GeneratorConfig& generator = config.generator(scenario_from(scenario));
  fs::create_directories(common.out_dir);
  std::vector<std::string> outputs;
  for (int j = 0; j < count; ++j) {
    std::uint64_t seed = config.seed + static_cast<std::uint64_t>(j);
    Instance instance = generate(generator, seed);
    std::string stem = scenario + "_" + std::to_string(seed);
    write_text(fs::path(common.out_dir) / (stem + ".json"), to_json(instance));
    outputs.push_back(stem + ".json");
    if (emit_lp) {
      std::vector<XorValuation> reports = truthful_reports(instance);
      write_text(fs::path(common.out_dir) / (stem + ".lp"),
                 winner_lp_text(instance.n_goods, reports));
      outputs.push_back(stem + ".lp");
    }
  }
  write_manifest(common.out_dir, command, config, outputs);
  return 0;
}

// ------------------------------------------------------------- metrics

int cmd_metrics(const CommonArgs& common, const std::string& scenario,
                const std::vector<std::string>& rule_texts, int instances, bool dump_samples,
                const std::string& command) {
  ExperimentConfig config = load_config(common);
  if (instances > 0) config.metric_instances = instances;
  std::vector<Rule> rules = parse_rules(rule_texts);
  const GeneratorConfig& generator = config.generator(scenario_from(scenario));

  RngStream stream = RngStream(config.seed).derive("metrics/" + scenario);
  std::vector<EvaluatedInstance> evaluated(static_cast<std::size_t>(config.metric_instances));
  std::vector<Instance> batch(evaluated.size());
  parallel_for(evaluated.size(), [&](std::size_t j) {
    batch[j] = generate(generator, stream.substream(j).next_u64());
    std::vector<XorValuation> reports = truthful_reports(batch[j]);
    evaluated[j] = evaluate_instance(batch[j].n_goods, reports);
  });
  std::vector<MetricReport> table = metric_table(evaluated, rules, config.kl);

  fs::create_directories(common.out_dir);
  CsvTable csv;
  csv.comment = hash_comment(config);
  csv.header = {"rule", "KLnorm", "KL", "L1", "L1norm", "L2", "L2norm", "Linf", "Linfnorm",
                "n_samples"};
  for (const MetricReport& row : table) {
    std::vector<std::string> r{rule_name(row.rule)};
    for (double v : row.values) r.push_back(format_double(v));
    r.push_back(std::to_string(row.n_samples));
    csv.rows.push_back(std::move(r));
  }
  csv.write(fs::path(common.out_dir) / "metrics.csv");
  std::vector<std::string> outputs{"metrics.csv"};

  if (dump_samples) {
    CsvTable samples;
    samples.comment = hash_comment(config);
    samples.header = {"rule", "instance", "agent", "payoff", "normalized"};
    auto add = [&](const std::string& name, const std::vector<PayoffSample>& list) {
      for (const PayoffSample& s : list) {
        samples.rows.push_back({name, std::to_string(s.instance_id), std::to_string(s.agent_id),
                                format_double(s.payoff), format_double(s.normalized)});
      }
    };
    std::vector<std::vector<XorValuation>> reports;
    reports.reserve(batch.size());
    for (const Instance& instance : batch) reports.push_back(truthful_reports(instance));
    add("vcg", collect_payoffs(batch, reports, Rule::Vcg));
    for (Rule rule : rules) add(rule_name(rule), collect_payoffs(batch, reports, rule));
    samples.write(fs::path(common.out_dir) / "fig3_samples.csv");
    outputs.push_back("fig3_samples.csv");
  }
  write_manifest(common.out_dir, command, config, outputs);
  return 0;
}

// --------------------------------------------------------- equilibrium

int cmd_equilibrium(const CommonArgs& common, const std::string& scenario,
                    const std::string& rule_text, int n_classes, const std::string& command) {
  ExperimentConfig config = load_config(common);
  Rule rule = rule_or_throw(rule_text);
  const GeneratorConfig& generator = config.generator(scenario_from(scenario));
  RngStream root(config.seed);

  EquilibriumResult result =
      iterate_equilibrium(generator, rule, n_classes, config.equilibrium,
                          root.derive("equilibrium/" + scenario + "/" + rule_name(rule)).next_u64());
  EquilibriumMeasure measure =
      measure_equilibrium(generator, result.profile, config.measure_instances,
                          root.derive("measure/" + scenario + "/" + rule_name(rule)).next_u64());

  fs::create_directories(common.out_dir);
  CsvTable csv;
  csv.comment = hash_comment(config);
  csv.header = {"scenario", "rule",           "classes",        "alpha_1",  "alpha_2",
                "alpha_3",  "mean_shave_pct", "efficiency_pct", "converged"};
  std::vector<std::string> row{scenario, rule_name(rule), std::to_string(n_classes)};
  for (int k = 0; k < 3; ++k) {
    row.push_back(k < result.profile.alpha.size() ? format_double(result.profile.alpha[k]) : "");
  }
  row.push_back(format_double(measure.mean_shave_pct));
  row.push_back(format_double(measure.efficiency_pct));
  row.push_back(result.converged ? "1" : "0");
  csv.rows.push_back(std::move(row));
  csv.write(fs::path(common.out_dir) / "equilibrium.csv");

  nlohmann::json trace = nlohmann::json::array();
  for (const IterationTraceRow& t : result.trace) {
    nlohmann::json entry;
    entry["iteration"] = t.iteration;
    entry["alpha_hat"] = std::vector<double>(t.alpha_hat.data(), t.alpha_hat.data() + t.alpha_hat.size());
    entry["alpha_bar"] = std::vector<double>(t.alpha_bar.data(), t.alpha_bar.data() + t.alpha_bar.size());
    entry["error"] = t.error;
    trace.push_back(std::move(entry));
  }
  write_text(fs::path(common.out_dir) / "equilibrium_trace.json", trace.dump(2) + "\n");
  write_manifest(common.out_dir, command, config, {"equilibrium.csv", "equilibrium_trace.json"});
  return 0;
}

// ----------------------------------------------------------- deviation

int cmd_deviation(const CommonArgs& common, const std::string& scenario, int instances,
                  const std::string& command) {
  ExperimentConfig config = load_config(common);
  const GeneratorConfig& generator = config.generator(scenario_from(scenario));
  if (instances <= 0) instances = 200;
  Eigen::VectorXd grid = default_rho_grid();
  RngStream root(config.seed);

  const Rule rules[] = {Rule::Vcg,   Rule::NoDiscount, Rule::Equal,     Rule::Fractional,
                        Rule::Small, Rule::Large,      Rule::Threshold, Rule::Reverse,
                        Rule::TwoTriangle};

  // Representative single instance: first seed owning an eligible agent; the
  // agent with the largest VCG payoff is the interesting one.
  Instance single;
  int single_agent = -1;
  for (std::uint64_t probe = 0; probe < 1000 && single_agent < 0; ++probe) {
    Instance candidate = generate(generator, root.derive("deviation/single").substream(probe).next_u64());
    std::vector<XorValuation> truth = truthful_reports(candidate);
    WdResult wd = solve_vcg(candidate.n_goods, truth);
    double best = 0.0;
    for (int agent : trading_agents(wd.profile, truth)) {
      if (wd.vcg_discounts[agent] > best) {
        best = wd.vcg_discounts[agent];
        single = candidate;
        single_agent = agent;
      }
    }
  }
  if (single_agent < 0) throw std::runtime_error("deviation: no eligible agent found");

  fs::create_directories(common.out_dir);
  auto curve_csv = [&](const std::string& file,
                       const std::vector<std::pair<std::string, Eigen::VectorXd>>& columns) {
    CsvTable csv;
    csv.comment = hash_comment(config);
    csv.header = {"rho"};
    for (const auto& [name, values] : columns) csv.header.push_back(name);
    for (Eigen::Index r = 0; r < grid.size(); ++r) {
      std::vector<std::string> row{format_double(grid[r])};
      for (const auto& [name, values] : columns) row.push_back(format_double(values[r]));
      csv.rows.push_back(std::move(row));
    }
    csv.write(fs::path(common.out_dir) / file);
  };

  std::vector<std::pair<std::string, Eigen::VectorXd>> single_cols, expected_cols, gain_cols,
      loss_cols;
  for (Rule rule : rules) {
    single_cols.emplace_back(rule_name(rule),
                             unilateral_curve(single, single_agent, rule, grid).profit);
    ExpectedCurves curves = expected_curves(generator, rule, grid, instances,
                                            root.derive("deviation/" + rule_name(rule)).next_u64());
    expected_cols.emplace_back(rule_name(rule), curves.expected.profit);
    gain_cols.emplace_back(rule_name(rule), curves.conditional_gain.profit);
    loss_cols.emplace_back(rule_name(rule), curves.conditional_loss.profit);
  }
  curve_csv("fig4_single.csv", single_cols);
  curve_csv("fig5_expected.csv", expected_cols);
  curve_csv("fig6_conditional_gain.csv", gain_cols);
  curve_csv("fig7_conditional_loss.csv", loss_cols);
  write_manifest(common.out_dir, command, config,
                 {"fig4_single.csv", "fig5_expected.csv", "fig6_conditional_gain.csv",
                  "fig7_conditional_loss.csv"});
  return 0;
}

// ----------------------------------------------------------------- fit

int cmd_fit(const CommonArgs& common, const std::string& scenario, int instances,
            const std::string& command) {
  ExperimentConfig config = load_config(common);
  const GeneratorConfig& generator = config.generator(scenario_from(scenario));
  if (instances <= 0) instances = config.metric_instances;
  RngStream stream = RngStream(config.seed).derive("fit/" + scenario);

  std::vector<WdResult> solved(static_cast<std::size_t>(instances));
  parallel_for(solved.size(), [&](std::size_t j) {
    Instance instance = generate(generator, stream.substream(j).next_u64());
    std::vector<XorValuation> truth = truthful_reports(instance);
    solved[j] = solve_vcg(instance.n_goods, truth);
  });

  std::vector<double> surplus, marginal, payoff;
  for (const WdResult& wd : solved) {
    surplus.push_back(wd.surplus);
    for (std::size_t i = 0; i < wd.profile.assignment.size(); ++i) {
      if (wd.profile.assignment[i] == TradeProfile::kNull) continue;
      marginal.push_back(wd.marginal[static_cast<Eigen::Index>(i)]);
      payoff.push_back(wd.vcg_discounts[static_cast<Eigen::Index>(i)]);
    }
  }

  Fit<GevParams> gev_surplus = fit_gev(surplus);
  Fit<GevParams> gev_marginal = fit_gev(marginal);
  Fit<GpdParams> gpd_payoff = fit_gpd(payoff);
  Fit<ExpParams> exp_payoff = fit_exponential(payoff);

  fs::create_directories(common.out_dir);
  CsvTable params;
  params.comment = hash_comment(config);
  params.header = {"dataset", "model", "p1", "p2", "p3", "log_likelihood", "n"};
  params.rows = {
      {"surplus", "gev", format_double(gev_surplus.params.location),
       format_double(gev_surplus.params.scale), format_double(gev_surplus.params.shape),
       format_double(gev_surplus.log_likelihood), std::to_string(surplus.size())},
      {"marginal_surplus", "gev", format_double(gev_marginal.params.location),
       format_double(gev_marginal.params.scale), format_double(gev_marginal.params.shape),
       format_double(gev_marginal.log_likelihood), std::to_string(marginal.size())},
      {"vcg_payoff", "gpd", format_double(gpd_payoff.params.scale),
       format_double(gpd_payoff.params.shape), "", format_double(gpd_payoff.log_likelihood),
       std::to_string(payoff.size())},
      {"vcg_payoff", "exponential", format_double(exp_payoff.params.rate), "", "",
       format_double(exp_payoff.log_likelihood), std::to_string(payoff.size())},
  };
  params.write(fs::path(common.out_dir) / "fit_params.csv");

  auto density_csv = [&](const std::string& file, const std::vector<double>& samples,
                         const std::vector<std::pair<std::string, std::function<double(double)>>>&
                             densities) {
    const int bins = 40;
    double lo = *std::min_element(samples.begin(), samples.end());
    double hi = *std::max_element(samples.begin(), samples.end());
    if (hi <= lo) hi = lo + 1.0;
    double width = (hi - lo) / bins;
    std::vector<int> counts(bins, 0);
    for (double x : samples) {
      int b = std::clamp(static_cast<int>((x - lo) / width), 0, bins - 1);
      ++counts[static_cast<std::size_t>(b)];
    }
    CsvTable csv;
    csv.comment = hash_comment(config);
    csv.header = {"x", "empirical_density"};
    for (const auto& [name, fn] : densities) csv.header.push_back(name);
    for (int b = 0; b < bins; ++b) {
      double x = lo + (b + 0.5) * width;
      std::vector<std::string> row{
          format_double(x),
          format_double(counts[static_cast<std::size_t>(b)] /
                        (static_cast<double>(samples.size()) * width))};
      for (const auto& [name, fn] : densities) row.push_back(format_double(fn(x)));
      csv.rows.push_back(std::move(row));
    }
    csv.write(fs::path(common.out_dir) / file);
  };

  density_csv("fig1_surplus.csv", surplus,
              {{"gev_density",
                [&](double x) { return std::exp(gev_log_density(gev_surplus.params, x)); }}});
  density_csv("fig1_marginal.csv", marginal,
              {{"gev_density",
                [&](double x) { return std::exp(gev_log_density(gev_marginal.params, x)); }}});
  density_csv("fig2_payoff.csv", payoff,
              {{"gpd_density",
                [&](double x) { return std::exp(gpd_log_density(gpd_payoff.params, x)); }},
               {"exp_density",
                [&](double x) { return std::exp(exp_log_density(exp_payoff.params, x)); }}});
  write_manifest(common.out_dir, command, config,
                 {"fit_params.csv", "fig1_surplus.csv", "fig1_marginal.csv", "fig2_payoff.csv"});
  return 0;
}

// ------------------------------------------------------------ correlate

int cmd_correlate(const CommonArgs& common, int n, double r, const std::string& input,
                  const std::string& x_col, const std::string& y_col, const std::string& command) {
  ExperimentConfig config = load_config(common);
  double p;
  if (!input.empty()) {
    std::ifstream in(input);
    if (!in) throw CLI::ValidationError("--input", "cannot open " + input);
    std::string line;
    do {
      if (!std::getline(in, line)) throw std::runtime_error("correlate: empty input");
    } while (!line.empty() && line[0] == '#');
    std::vector<std::string> header;
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
    auto col_of = [&](const std::string& name) {
      for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] == name) return k;
      }
      throw std::runtime_error("correlate: column '" + name + "' not found");
    };
    std::size_t xi = col_of(x_col), yi = col_of(y_col);
    std::vector<double> xs, ys;
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] == '#') continue;
      std::vector<std::string> cells;
      std::stringstream ls(line);
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      if (cells.size() <= std::max(xi, yi)) continue;
      xs.push_back(std::stod(cells[xi]));
      ys.push_back(std::stod(cells[yi]));
    }
    Correlation c = pearson(xs, ys);
    r = c.r;
    p = c.p;
    n = static_cast<int>(xs.size());
  } else {
    if (n < 3) throw CLI::ValidationError("--n", "need n >= 3");
    p = pearson_p_value(r, n);
  }
  std::cout << "n=" << n << " r=" << format_double(r) << " p=" << format_double(p) << "\n";
  fs::create_directories(common.out_dir);
  CsvTable csv;
  csv.comment = hash_comment(config);
  csv.header = {"n", "r", "p"};
  csv.rows = {{std::to_string(n), format_double(r), format_double(p)}};
  csv.write(fs::path(common.out_dir) / "correlate.csv");
  write_manifest(common.out_dir, command, config, {"correlate.csv"});
  return 0;
}

// ---------------------------------------------------------------- study

int cmd_study(const CommonArgs& common, const std::string& command) {
  ExperimentConfig config = load_config(common);
  StudyResult result = run_study(config);
  write_study_outputs(result, config, common.out_dir);
  write_manifest(common.out_dir, command, config,
                 {"table1.csv", "table2.csv", "table3.csv", "table4.csv", "table5.csv"});
  return 0;
}

// --------------------------------------------------------------- online

int cmd_online(const CommonArgs& common, const std::string& scenario, const std::string& metric,
               int epochs, int epoch_size, int n_classes, const std::string& command) {
  ExperimentConfig config = load_config(common);
  OnlineParams params;
  params.metric = metric.empty() ? config.online_metric : selection_metric_from(metric);
  params.n_epochs = epochs > 0 ? epochs : config.online_epochs;
  params.epoch_size = epoch_size > 0 ? epoch_size : config.online_epoch_size;
  params.n_classes = n_classes;
  params.equilibrium = config.equilibrium;
  params.kl = config.kl;
  params.measure_instances = config.measure_instances;

  std::vector<OnlineTraceRow> trace =
      run_online_search(config.generator(scenario_from(scenario)), params, config.seed);

  fs::create_directories(common.out_dir);
  CsvTable csv;
  csv.comment = hash_comment(config);
  csv.header = {"epoch", "rule", "efficiency_fraction"};
  for (const OnlineTraceRow& row : trace) {
    csv.rows.push_back({std::to_string(row.epoch), rule_letter(row.deployed),
                        format_double(row.efficiency_fraction)});
  }
  csv.write(fs::path(common.out_dir) / "fig8_online.csv");
  write_manifest(common.out_dir, command, config, {"fig8_online.csv"});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"combinatorial-exchange mechanism laboratory"};
  app.require_subcommand(1);
  app.fallthrough();
  const std::string command = join_argv(argc, argv);

  CommonArgs common;
  app.add_option("--config", common.config_path, "JSON config file");
  app.add_option("--out-dir", common.out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", common.seed, "root seed (overrides config)");

  std::string scenario = "super";
  std::vector<std::string> rule_texts;
  std::string rule_text = "threshold";
  std::string metric_text;
  std::string input, x_col, y_col;
  int count = 10, instances = 0, n_classes = 1, epochs = 0, epoch_size = 0, corr_n = 0;
  double corr_r = 0.0;
  bool emit_lp = false, dump_samples = false;

  auto* gen = app.add_subcommand("gen", "generate instances as JSON")->fallthrough();
  gen->add_option("--scenario", scenario, "decay | uniform | super");
  gen->add_option("--count", count, "instances to generate");
  gen->add_flag("--emit-lp", emit_lp, "also write the winner-determination LP");

  auto* metrics = app.add_subcommand("metrics", "at-truth metric table")->fallthrough();
  metrics->add_option("--scenario", scenario);
  metrics->add_option("--rule", rule_texts, "rule names or letters; default all");
  metrics->add_option("--instances", instances);
  metrics->add_flag("--dump-samples", dump_samples, "write per-agent payoff samples");

  auto* equilibrium = app.add_subcommand("equilibrium", "iterated best-response equilibrium")->fallthrough();
  equilibrium->add_option("--scenario", scenario);
  equilibrium->add_option("--rule", rule_text);
  equilibrium->add_option("--classes", n_classes)->check(CLI::Range(1, 3));

  auto* deviation = app.add_subcommand("deviation", "unilateral misreport curves")->fallthrough();
  deviation->add_option("--scenario", scenario);
  deviation->add_option("--instances", instances);

  auto* fit = app.add_subcommand("fit", "GEV/GPD/exponential fits of surplus and payoffs")->fallthrough();
  fit->add_option("--scenario", scenario);
  fit->add_option("--instances", instances);

  auto* correlate = app.add_subcommand("correlate", "Pearson correlation with two-sided p")->fallthrough();
  correlate->add_option("--n", corr_n, "sample count (with --r)");
  correlate->add_option("--r", corr_r, "correlation coefficient (with --n)");
  correlate->add_option("--input", input, "CSV file with named columns");
  correlate->add_option("--x", x_col);
  correlate->add_option("--y", y_col);

  auto* study = app.add_subcommand("study", "full 54-condition study with tables 1-5")->fallthrough();

  auto* online = app.add_subcommand("online", "epoch-based online mechanism selection")->fallthrough();
  online->add_option("--scenario", scenario);
  online->add_option("--metric", metric_text, "KLnorm | L1norm | L2norm | Linfnorm");
  online->add_option("--epochs", epochs);
  online->add_option("--epoch-size", epoch_size);
  online->add_option("--classes", n_classes)->check(CLI::Range(1, 3));

  try {
    app.parse(argc, argv);
    common.seed_set = seed_opt->count() > 0;
    if (gen->parsed()) return cmd_gen(common, scenario, count, emit_lp, command);
    if (metrics->parsed()) {
      return cmd_metrics(common, scenario, rule_texts, instances, dump_samples, command);
    }
    if (equilibrium->parsed()) {
      return cmd_equilibrium(common, scenario, rule_text, n_classes, command);
    }
    if (deviation->parsed()) return cmd_deviation(common, scenario, instances, command);
    if (fit->parsed()) return cmd_fit(common, scenario, instances, command);
    if (correlate->parsed()) {
      return cmd_correlate(common, corr_n, corr_r, input, x_col, y_col, command);
    }
    if (study->parsed()) return cmd_study(common, command);
    if (online->parsed()) {
      return cmd_online(common, scenario, metric_text, epochs, epoch_size, n_classes, command);
    }
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
