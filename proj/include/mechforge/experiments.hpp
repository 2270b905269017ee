#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mechforge/equilibrium.hpp"
#include "mechforge/generators.hpp"
#include "mechforge/metrics.hpp"
#include "mechforge/online.hpp"

namespace mechforge {

/// Root configuration for the experiment harness. Parsed from one JSON file
/// with sections {generators, equilibrium, metrics, online}; omitted fields
/// keep their defaults.
struct ExperimentConfig {
  std::map<Scenario, GeneratorConfig> generators;  // one per scenario
  IterationParams equilibrium;
  KlConfig kl;
  int metric_instances = 400;    // batch size for metric tables
  int measure_instances = 400;   // batch size for shave/efficiency measurement
  int online_epochs = 20;
  int online_epoch_size = 100;
  SelectionMetric online_metric = SelectionMetric::KlNorm;
  std::uint64_t seed = 1;

  const GeneratorConfig& generator(Scenario scenario) const { return generators.at(scenario); }
};

ExperimentConfig default_config();
ExperimentConfig config_from_json(const std::string& text);
/// Canonical serialization; its hash goes into the manifest.
std::string config_to_json(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

/// One of the 3 scenarios x 6 rules x 3 class counts study conditions.
struct ConditionResult {
  Scenario scenario = Scenario::Decay;
  Rule rule = Rule::Small;
  int n_classes = 1;
  bool converged = false;
  double metric_truth[8] = {};        // indexed like kMetricNames
  double metric_equilibrium[8] = {};
  double mean_shave_pct = 0.0;
  double efficiency_pct = 0.0;
  Eigen::VectorXd alpha;
};

struct CorrelationReport {
  std::string metric;
  std::string target;   // "efficiency" or "mean_shave"
  std::string at;       // "truth" or "equilibrium"
  int n = 0;
  double r = 0.0;
  double p = 1.0;
  bool significant = false;
  bool defined = true;  // false when variance vanished or n < 3
};

/// The six rules entering the correlation study.
inline constexpr Rule kStudyRules[] = {Rule::TwoTriangle, Rule::Threshold, Rule::Reverse,
                                       Rule::Small,       Rule::Large,     Rule::Fractional};

/// Rules shown in the at-truth and at-equilibrium metric tables.
inline constexpr Rule kTableRules[] = {Rule::TwoTriangle, Rule::Threshold, Rule::Reverse,
                                       Rule::Small,       Rule::Large,     Rule::Fractional,
                                       Rule::Equal,       Rule::NoDiscount};

struct StudyResult {
  std::vector<ConditionResult> conditions;
  std::vector<CorrelationReport> correlations;
  // metric_truth_by_scenario[scenario][rule-in-kTableRules order][metric]
  std::map<Scenario, std::vector<MetricReport>> truth_tables;
  int n_excluded = 0;  // non-converged conditions kept out of correlations
};

StudyResult run_study(const ExperimentConfig& config);

/// CSV writers for the study tables. All floats print with %.12g.
void write_study_outputs(const StudyResult& result, const ExperimentConfig& config,
                         const std::filesystem::path& out_dir);

/// Writes manifest.json capturing command, seed, config hash and version.
void write_manifest(const std::filesystem::path& out_dir, const std::string& command,
                    const ExperimentConfig& config, const std::vector<std::string>& outputs);

std::string format_double(double value);

struct CsvTable {
  std::string comment;  // emitted as a leading "# ..." line when nonempty
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(const std::filesystem::path& path) const;
};

/// "config_hash=<hex>" comment line tying a CSV to its manifest.
std::string hash_comment(const ExperimentConfig& config);

}  // namespace mechforge
