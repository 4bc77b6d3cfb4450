#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedcy/model.hpp"
#include "fedcy/synthdata.hpp"

namespace fedcy::metrics {

/// What to do with a class that appears in neither predictions nor labels.
enum class AbsentClass { exclude, score_zero };

/// Unweighted mean of per-class F1 over classes 1..num_classes. Per-class
/// F1 is 2PR/(P+R), taken as 0 when P+R = 0.
double macro_f1(std::span<const int> predictions, std::span<const int> labels, std::size_t num_classes,
                AbsentClass absent = AbsentClass::exclude);

struct ClientScore {
  std::string client_id;
  synthdata::Role role = synthdata::Role::unlabeled;
  double f1 = 0.0;

  friend bool operator==(const ClientScore&, const ClientScore&) = default;
};

struct EvaluationReport {
  std::string mode;
  std::uint64_t seed = 0;
  synthdata::Split split = synthdata::Split::test;
  std::vector<ClientScore> clients;  // labeled client first, then unlabeled in order
  double overall_unlabeled = 0.0;    // mean over unlabeled clients
  double overall_all = 0.0;          // mean over every entry of `clients`
  std::optional<double> held_out;    // not part of either overall

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

/// Fills the overall fields from `report.clients`.
void compute_overalls(EvaluationReport& report);

EvaluationReport evaluate_scenario(const model::ParameterSet& params, const synthdata::Scenario& scenario,
                                   synthdata::Split split, const std::string& mode, std::uint64_t seed);

// Multi-run aggregation --------------------------------------------------------

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // unbiased; 0 for a single value
};

MeanStd mean_std(std::span<const double> values);

struct FieldSummary {
  std::string name;
  MeanStd stats;
};

/// Column names of a report, in table order: one per client, then
/// overall_unlabeled, overall_all, held_out (when present).
std::vector<std::string> report_columns(const EvaluationReport& report);
std::vector<double> report_values(const EvaluationReport& report);

/// Per-field mean and standard deviation across runs. Every report must have
/// the same columns.
std::vector<FieldSummary> aggregate_runs(std::span<const EvaluationReport> reports);

// Serialization ----------------------------------------------------------------

inline constexpr int kReportFormatVersion = 1;

nlohmann::json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& j);

/// Delimited table: header "client,role,f1", one row per client, then
/// overall_unlabeled, overall_all and held_out rows.
std::string report_csv(const EvaluationReport& report);

}  // namespace fedcy::metrics
