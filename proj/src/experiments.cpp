#include "mechforge/experiments.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "mechforge/parallel.hpp"
#include "mechforge/rng.hpp"
#include "mechforge/stats.hpp"

namespace mechforge {

namespace {

using nlohmann::json;

json generator_to_json(const GeneratorConfig& g) {
  json j;
  j["scenario"] = scenario_name(g.scenario);
  j["n_goods"] = g.n_goods;
  j["n_buyers"] = g.n_buyers;
  j["n_sellers"] = g.n_sellers;
  j["atoms_per_agent"] = g.atoms_per_agent;
  j["endowment_size"] = g.endowment_size;
  j["common_value"] = {g.common_value_lo, g.common_value_hi};
  j["private_value"] = {g.private_value_lo, g.private_value_hi};
  j["beta"] = g.beta;
  j["gamma"] = g.gamma;
  j["decay_probability"] = g.decay_probability;
  j["v_max"] = g.v_max;
  return j;
}

void generator_from_json(const json& j, GeneratorConfig& g) {
  if (j.contains("scenario")) g.scenario = scenario_from(j.at("scenario").get<std::string>());
  if (j.contains("n_goods")) g.n_goods = j.at("n_goods").get<int>();
  if (j.contains("n_buyers")) g.n_buyers = j.at("n_buyers").get<int>();
  if (j.contains("n_sellers")) g.n_sellers = j.at("n_sellers").get<int>();
  if (j.contains("atoms_per_agent")) g.atoms_per_agent = j.at("atoms_per_agent").get<int>();
  if (j.contains("endowment_size")) g.endowment_size = j.at("endowment_size").get<int>();
  if (j.contains("common_value")) {
    g.common_value_lo = j.at("common_value").at(0).get<double>();
    g.common_value_hi = j.at("common_value").at(1).get<double>();
  }
  if (j.contains("private_value")) {
    g.private_value_lo = j.at("private_value").at(0).get<double>();
    g.private_value_hi = j.at("private_value").at(1).get<double>();
  }
  if (j.contains("beta")) g.beta = j.at("beta").get<double>();
  if (j.contains("gamma")) g.gamma = j.at("gamma").get<double>();
  if (j.contains("decay_probability")) {
    g.decay_probability = j.at("decay_probability").get<double>();
  }
  if (j.contains("v_max")) g.v_max = j.at("v_max").get<double>();
  g.validate();
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig config;
  for (Scenario scenario : kAllScenarios) {
    GeneratorConfig g;
    g.scenario = scenario;
    config.generators[scenario] = g;
  }
  return config;
}

ExperimentConfig config_from_json(const std::string& text) {
  ExperimentConfig config = default_config();
  json j = json::parse(text);
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("generators")) {
    for (Scenario scenario : kAllScenarios) {
      const std::string name = scenario_name(scenario);
      if (j.at("generators").contains(name)) {
        generator_from_json(j.at("generators").at(name), config.generators[scenario]);
        config.generators[scenario].scenario = scenario;
      }
    }
  }
  if (j.contains("equilibrium")) {
    const json& e = j.at("equilibrium");
    IterationParams& p = config.equilibrium;
    if (e.contains("theta")) p.theta = e.at("theta").get<double>();
    if (e.contains("kappa")) p.kappa = e.at("kappa").get<double>();
    if (e.contains("grid_points")) p.grid_points = e.at("grid_points").get<int>();
    if (e.contains("instances_per_iteration")) {
      p.instances_per_iteration = e.at("instances_per_iteration").get<int>();
    }
    if (e.contains("max_iterations")) p.max_iterations = e.at("max_iterations").get<int>();
    if (e.contains("initial_span")) p.initial_span = e.at("initial_span").get<double>();
    if (e.contains("class_reference_samples")) {
      p.class_reference_samples = e.at("class_reference_samples").get<int>();
    }
  }
  if (j.contains("metrics")) {
    const json& m = j.at("metrics");
    if (m.contains("n_bins")) config.kl.n_bins = m.at("n_bins").get<int>();
    if (m.contains("epsilon")) config.kl.epsilon = m.at("epsilon").get<double>();
    if (m.contains("instances")) config.metric_instances = m.at("instances").get<int>();
    if (m.contains("measure_instances")) {
      config.measure_instances = m.at("measure_instances").get<int>();
    }
  }
  if (j.contains("online")) {
    const json& o = j.at("online");
    if (o.contains("epochs")) config.online_epochs = o.at("epochs").get<int>();
    if (o.contains("epoch_size")) config.online_epoch_size = o.at("epoch_size").get<int>();
    if (o.contains("metric")) {
      config.online_metric = selection_metric_from(o.at("metric").get<std::string>());
    }
  }
  return config;
}

std::string config_to_json(const ExperimentConfig& config) {
  json j;
  j["seed"] = config.seed;
  for (Scenario scenario : kAllScenarios) {
    j["generators"][scenario_name(scenario)] = generator_to_json(config.generator(scenario));
  }
  j["equilibrium"] = {{"theta", config.equilibrium.theta},
                      {"kappa", config.equilibrium.kappa},
                      {"grid_points", config.equilibrium.grid_points},
                      {"instances_per_iteration", config.equilibrium.instances_per_iteration},
                      {"max_iterations", config.equilibrium.max_iterations},
                      {"initial_span", config.equilibrium.initial_span},
                      {"class_reference_samples", config.equilibrium.class_reference_samples}};
  j["metrics"] = {{"n_bins", config.kl.n_bins},
                  {"epsilon", config.kl.epsilon},
                  {"instances", config.metric_instances},
                  {"measure_instances", config.measure_instances}};
  j["online"] = {{"epochs", config.online_epochs},
                 {"epoch_size", config.online_epoch_size},
                 {"metric", selection_metric_name(config.online_metric)}};
  return j.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : config_to_json(config)) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

std::vector<EvaluatedInstance> evaluate_batch(const GeneratorConfig& generator, int count,
                                              RngStream stream, const ShaveProfile* bids) {
  std::vector<EvaluatedInstance> evaluated(static_cast<std::size_t>(count));
  parallel_for(evaluated.size(), [&](std::size_t j) {
    Instance instance = generate(generator, stream.substream(j).next_u64());
    std::vector<XorValuation> reports =
        bids != nullptr ? shaved_reports(instance, *bids) : truthful_reports(instance);
    evaluated[j] = evaluate_instance(instance.n_goods, reports);
  });
  return evaluated;
}

int metric_index_of(const std::string& name) {
  for (int k = 0; k < 8; ++k) {
    if (name == kMetricNames[k]) return k;
  }
  throw std::invalid_argument("unknown metric name '" + name + "'");
}

}  // namespace

StudyResult run_study(const ExperimentConfig& config) {
  StudyResult result;
  RngStream root(config.seed);

  // At-truth metric tables, one per scenario, shared by all class counts.
  for (Scenario scenario : kAllScenarios) {
    std::vector<EvaluatedInstance> evaluated =
        evaluate_batch(config.generator(scenario), config.metric_instances,
                       root.derive("study/truth/" + scenario_name(scenario)), nullptr);
    result.truth_tables[scenario] =
        metric_table(evaluated, std::span<const Rule>(kTableRules, 8), config.kl);
  }

  for (Scenario scenario : kAllScenarios) {
    for (Rule rule : kStudyRules) {
      for (int n_classes : {1, 2, 3}) {
        const std::string tag = "study/" + scenario_name(scenario) + "/" + rule_name(rule) + "/K" +
                                std::to_string(n_classes);
        const GeneratorConfig& generator = config.generator(scenario);
        EquilibriumResult equilibrium =
            iterate_equilibrium(generator, rule, n_classes, config.equilibrium,
                                root.derive(tag + "/equilibrium").next_u64());
        EquilibriumMeasure measure =
            measure_equilibrium(generator, equilibrium.profile, config.measure_instances,
                                root.derive(tag + "/measure").next_u64());
        std::vector<EvaluatedInstance> evaluated =
            evaluate_batch(generator, config.metric_instances, root.derive(tag + "/metrics"),
                           &equilibrium.profile);
        const Rule rules[] = {rule};
        std::vector<MetricReport> table =
            metric_table(evaluated, std::span<const Rule>(rules, 1), config.kl);

        ConditionResult condition;
        condition.scenario = scenario;
        condition.rule = rule;
        condition.n_classes = n_classes;
        condition.converged = equilibrium.converged;
        condition.mean_shave_pct = measure.mean_shave_pct;
        condition.efficiency_pct = measure.efficiency_pct;
        condition.alpha = equilibrium.profile.alpha;
        for (int k = 0; k < 8; ++k) condition.metric_equilibrium[k] = table[0].values[k];
        for (std::size_t r = 0; r < 8; ++r) {
          if (kTableRules[r] == rule) {
            for (int k = 0; k < 8; ++k) {
              condition.metric_truth[k] = result.truth_tables[scenario][r].values[k];
            }
          }
        }
        result.conditions.push_back(std::move(condition));
      }
    }
  }

  // Correlations over the converged conditions: four normalized metrics
  // against equilibrium efficiency and mean shave, at truth and in
  // equilibrium.
  const char* normalized_metrics[] = {"KLnorm", "L1norm", "L2norm", "Linfnorm"};
  for (const char* at : {"truth", "equilibrium"}) {
    for (const char* target : {"efficiency", "mean_shave"}) {
      for (const char* metric : normalized_metrics) {
        CorrelationReport report;
        report.metric = metric;
        report.target = target;
        report.at = at;
        std::vector<double> xs, ys;
        for (const ConditionResult& condition : result.conditions) {
          if (!condition.converged) continue;
          int k = metric_index_of(metric);
          xs.push_back(std::string(at) == "truth" ? condition.metric_truth[k]
                                                  : condition.metric_equilibrium[k]);
          ys.push_back(std::string(target) == "efficiency" ? condition.efficiency_pct
                                                           : condition.mean_shave_pct);
        }
        report.n = static_cast<int>(xs.size());
        try {
          Correlation c = pearson(xs, ys);
          report.r = c.r;
          report.p = c.p;
          report.significant = c.p < 0.05;
        } catch (const std::invalid_argument&) {
          report.defined = false;
        }
        result.correlations.push_back(std::move(report));
      }
    }
  }
  result.n_excluded = 0;
  for (const ConditionResult& condition : result.conditions) {
    if (!condition.converged) ++result.n_excluded;
  }
  return result;
}

std::string format_double(double value) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

std::string hash_comment(const ExperimentConfig& config) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "config_hash=%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  return buf;
}

void CsvTable::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (!comment.empty()) out << "# " << comment << '\n';
  auto emit_row = [&](const std::vector<std::string>& row) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k > 0) out << ',';
      out << row[k];
    }
    out << '\n';
  };
  emit_row(header);
  for (const auto& row : rows) emit_row(row);
}

void write_study_outputs(const StudyResult& result, const ExperimentConfig& config,
                         const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string stamp = hash_comment(config);

  // table1: at-truth metrics averaged across the three scenarios.
  {
    CsvTable t;
    t.comment = stamp;
    t.header = {"rule", "KLnorm", "KL", "L1", "L1norm", "L2", "L2norm", "Linf", "Linfnorm"};
    for (std::size_t r = 0; r < 8; ++r) {
      std::vector<std::string> row{rule_name(kTableRules[r])};
      for (int k = 0; k < 8; ++k) {
        double sum = 0.0;
        for (Scenario scenario : kAllScenarios) {
          sum += result.truth_tables.at(scenario)[r].values[k];
        }
        row.push_back(format_double(sum / 3.0));
      }
      t.rows.push_back(std::move(row));
    }
    t.write(out_dir / "table1.csv");
  }

  // table2: equilibrium shave and efficiency per condition.
  {
    CsvTable t;
    t.comment = stamp;
    t.header = {"scenario", "rule",           "classes",        "alpha_1",  "alpha_2",
                "alpha_3",  "mean_shave_pct", "efficiency_pct", "converged"};
    for (const ConditionResult& c : result.conditions) {
      std::vector<std::string> row{scenario_name(c.scenario), rule_name(c.rule),
                                   std::to_string(c.n_classes)};
      for (int k = 0; k < 3; ++k) {
        row.push_back(k < c.alpha.size() ? format_double(c.alpha[k]) : "");
      }
      row.push_back(format_double(c.mean_shave_pct));
      row.push_back(format_double(c.efficiency_pct));
      row.push_back(c.converged ? "1" : "0");
      t.rows.push_back(std::move(row));
    }
    t.write(out_dir / "table2.csv");
  }

  // table3/table4: correlations at truth / in equilibrium.
  for (const char* at : {"truth", "equilibrium"}) {
    CsvTable t;
    t.comment = stamp;
    t.header = {"target", "metric", "n", "r", "p", "significant_at_0.05"};
    for (const CorrelationReport& c : result.correlations) {
      if (c.at != at) continue;
      std::vector<std::string> row{c.target, c.metric, std::to_string(c.n)};
      if (c.defined) {
        row.push_back(format_double(c.r));
        row.push_back(format_double(c.p));
        row.push_back(c.significant ? "Y" : "N");
      } else {
        row.insert(row.end(), {"nan", "nan", "undefined"});
      }
      t.rows.push_back(std::move(row));
    }
    t.write(out_dir / (std::string(at) == "truth" ? "table3.csv" : "table4.csv"));
  }

  // table5: at-equilibrium normalized metrics averaged across scenarios and
  // class counts, one row per studied rule.
  {
    CsvTable t;
    t.comment = stamp;
    t.header = {"rule", "KLnorm", "L1norm", "L2norm", "Linfnorm"};
    for (Rule rule : kStudyRules) {
      double sums[4] = {};
      int count = 0;
      for (const ConditionResult& c : result.conditions) {
        if (c.rule != rule) continue;
        sums[0] += c.metric_equilibrium[0];
        sums[1] += c.metric_equilibrium[3];
        sums[2] += c.metric_equilibrium[5];
        sums[3] += c.metric_equilibrium[7];
        ++count;
      }
      std::vector<std::string> row{rule_name(rule)};
      for (double s : sums) row.push_back(format_double(count > 0 ? s / count : 0.0));
      t.rows.push_back(std::move(row));
    }
    t.write(out_dir / "table5.csv");
  }
}

void write_manifest(const std::filesystem::path& out_dir, const std::string& command,
                    const ExperimentConfig& config, const std::vector<std::string>& outputs) {
  std::filesystem::create_directories(out_dir);
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  json j;
  j["command"] = command;
  j["seed"] = config.seed;
  j["config_hash"] = hash;
  j["version"] = "0.1.0";
  j["outputs"] = outputs;
  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest.json");
  out << j.dump(2) << '\n';
}

}  // namespace mechforge
