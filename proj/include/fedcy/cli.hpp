#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedcy/federation.hpp"
#include "fedcy/metrics.hpp"
#include "fedcy/model.hpp"
#include "fedcy/synthdata.hpp"

namespace fedcy::cli {

namespace fs = std::filesystem;

/// A bad config document. `field` is the dotted key path and `line` the
/// 1-based line of that key in the source text (0 when unknown).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, std::size_t line, std::string field, const std::string& message);

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::string source_;
  std::size_t line_;
  std::string field_;
};

struct ExperimentConfig {
  synthdata::ScenarioConfig scenario;
  std::uint64_t scenario_seed = 7;
  std::vector<std::size_t> hidden_dims{64};
  std::size_t embed_dim = 16;
  federation::FederationConfig federation;
  std::string data_dir = "data";
  std::string out_dir = "runs";

  /// Input size and phase count follow the scenario.
  model::ModelConfig model() const;
  void validate() const;
};

inline constexpr int kConfigFormatVersion = 1;

/// The fully resolved config, every field present.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Parses a config document. Missing keys keep their defaults; unknown keys,
/// wrong types and out-of-range values raise ConfigError.
ExperimentConfig config_from_text(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const fs::path& path);
void write_config(const fs::path& path, const ExperimentConfig& cfg);

// Commands ------------------------------------------------------------------------

/// Writes one dataset file per client, manifest.json and config.json into
/// `out` (default: the config's data_dir).
void cmd_generate(const ExperimentConfig& cfg, const fs::path& out);

struct TrainOutcome {
  fs::path run_dir;
  federation::TrainingResult training;
  metrics::EvaluationReport evaluation;
};

/// Trains `mode` with `seed` on the datasets in cfg.data_dir and fills
/// `run_dir` with config.json, reports.jsonl, checkpoint_best.json,
/// evaluation.json, evaluation.csv and access_log.jsonl.
TrainOutcome cmd_train(ExperimentConfig cfg, federation::Mode mode, std::uint64_t seed, const fs::path& run_dir);

struct ComparisonRow {
  std::string mode;
  std::size_t runs = 0;
  std::vector<metrics::FieldSummary> fields;
};

struct Comparison {
  std::vector<std::string> columns;
  std::vector<ComparisonRow> rows;  // one per mode, in first-seen order
};

/// Groups the runs' test evaluations by mode and aggregates across seeds.
Comparison cmd_compare(const std::vector<fs::path>& run_dirs);

/// Aligned table with "mean ± std" cells.
std::string format_table(const Comparison& c);

/// Delimited file: mode,runs, then <column>_mean,<column>_std per column.
std::string format_csv(const Comparison& c);

// Gradient verification -------------------------------------------------------

struct GradcheckOptions {
  std::string component = "all";  // all, tcc_pair, tcc_batch, ntxent, supcon, cross_entropy, labeled_objective
  std::uint64_t seed = 0;
  int instances = 50;
  double step = 1e-5;
  double tolerance = 1e-4;
  bool corrupt = false;  // test hook: perturbs the analytic gradient
};

struct GradcheckResult {
  std::string component;
  int instances = 0;
  int failures = 0;
  double max_relative_error = 0.0;
};

std::vector<std::string> gradcheck_components();
std::vector<GradcheckResult> run_gradcheck(const GradcheckOptions& opts);

/// Full command-line entry point; returns the process exit status.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace fedcy::cli
