#include "fedcy/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace fedcy::metrics {

using nlohmann::json;
using synthdata::Role;
using synthdata::Split;

double macro_f1(std::span<const int> predictions, std::span<const int> labels, std::size_t num_classes,
                AbsentClass absent) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("macro_f1: " + std::to_string(predictions.size()) + " predictions for " +
                                std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw std::invalid_argument("macro_f1: empty input");
  const auto check = [&](int c) {
    if (c < 1 || static_cast<std::size_t>(c) > num_classes) {
      throw std::invalid_argument("macro_f1: unknown class " + std::to_string(c));
    }
    return static_cast<std::size_t>(c - 1);
  };
  std::vector<std::size_t> tp(num_classes, 0), predicted(num_classes, 0), actual(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t p = check(predictions[i]);
    const std::size_t y = check(labels[i]);
    ++predicted[p];
    ++actual[y];
    if (p == y) ++tp[p];
  }
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (predicted[c] == 0 && actual[c] == 0) {
      if (absent == AbsentClass::score_zero) ++counted;
      continue;
    }
    // 2PR/(P+R) simplifies to 2TP / (predicted + actual).
    total += 2.0 * static_cast<double>(tp[c]) / static_cast<double>(predicted[c] + actual[c]);
    ++counted;
  }
  return total / static_cast<double>(counted);
}

void compute_overalls(EvaluationReport& report) {
  double unl = 0.0, all = 0.0;
  std::size_t n_unl = 0;
  for (const auto& c : report.clients) {
    all += c.f1;
    if (c.role == Role::unlabeled) {
      unl += c.f1;
      ++n_unl;
    }
  }
  report.overall_all = report.clients.empty() ? 0.0 : all / static_cast<double>(report.clients.size());
  report.overall_unlabeled = n_unl == 0 ? 0.0 : unl / static_cast<double>(n_unl);
}

namespace {

double client_f1(const model::ParameterSet& params, const synthdata::ClientDataset& client, Split split) {
  const auto view = synthdata::evaluation_view(client, split);
  const auto predictions = model::predict_phases(params, view.frames);
  return macro_f1(predictions, view.labels, params.config.num_phases);
}

}  // namespace

EvaluationReport evaluate_scenario(const model::ParameterSet& params, const synthdata::Scenario& scenario,
                                   Split split, const std::string& mode, std::uint64_t seed) {
  if (split == Split::train) throw std::invalid_argument("evaluate_scenario: evaluation needs validation or test");
  EvaluationReport report;
  report.mode = mode;
  report.seed = seed;
  report.split = split;
  report.clients.push_back({scenario.labeled.id(), Role::labeled, client_f1(params, scenario.labeled, split)});
  for (const auto& c : scenario.unlabeled) {
    report.clients.push_back({c.id(), Role::unlabeled, client_f1(params, c, split)});
  }
  if (scenario.held_out.frame_count(split) > 0) report.held_out = client_f1(params, scenario.held_out, split);
  compute_overalls(report);
  return report;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_std: no values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  // Identical runs must report exactly zero spread, which rounding in the
  // mean would otherwise spoil.
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; })) return {values[0], 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

std::vector<std::string> report_columns(const EvaluationReport& report) {
  std::vector<std::string> cols;
  for (const auto& c : report.clients) cols.push_back(c.client_id);
  cols.emplace_back("overall_unlabeled");
  cols.emplace_back("overall_all");
  if (report.held_out) cols.emplace_back("held_out");
  return cols;
}

std::vector<double> report_values(const EvaluationReport& report) {
  std::vector<double> vals;
  for (const auto& c : report.clients) vals.push_back(c.f1);
  vals.push_back(report.overall_unlabeled);
  vals.push_back(report.overall_all);
  if (report.held_out) vals.push_back(*report.held_out);
  return vals;
}

std::vector<FieldSummary> aggregate_runs(std::span<const EvaluationReport> reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate_runs: no reports");
  const auto columns = report_columns(reports.front());
  std::vector<std::vector<double>> by_field(columns.size());
  for (const auto& r : reports) {
    if (report_columns(r) != columns) throw std::invalid_argument("aggregate_runs: reports have different columns");
    const auto vals = report_values(r);
    for (std::size_t i = 0; i < vals.size(); ++i) by_field[i].push_back(vals[i]);
  }
  std::vector<FieldSummary> out;
  for (std::size_t i = 0; i < columns.size(); ++i) out.push_back({columns[i], mean_std(by_field[i])});
  return out;
}

json report_to_json(const EvaluationReport& report) {
  json clients = json::array();
  for (const auto& c : report.clients) {
    clients.push_back({{"client_id", c.client_id}, {"role", synthdata::to_string(c.role)}, {"f1", c.f1}});
  }
  json j{{"format_version", kReportFormatVersion},
         {"kind", "fedcy.evaluation"},
         {"mode", report.mode},
         {"seed", report.seed},
         {"split", synthdata::to_string(report.split)},
         {"clients", std::move(clients)},
         {"overall_unlabeled", report.overall_unlabeled},
         {"overall_all", report.overall_all},
         {"held_out", nullptr}};
  if (report.held_out) j["held_out"] = *report.held_out;
  return j;
}

EvaluationReport report_from_json(const json& j) {
  if (j.value("kind", "") != "fedcy.evaluation") throw std::runtime_error("not an evaluation document");
  if (j.at("format_version").get<int>() != kReportFormatVersion) {
    throw std::runtime_error("unsupported evaluation format version");
  }
  EvaluationReport r;
  r.mode = j.at("mode").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.split = synthdata::split_from_string(j.at("split").get<std::string>());
  for (const auto& c : j.at("clients")) {
    r.clients.push_back({c.at("client_id").get<std::string>(),
                         synthdata::role_from_string(c.at("role").get<std::string>()), c.at("f1").get<double>()});
  }
  r.overall_unlabeled = j.at("overall_unlabeled").get<double>();
  r.overall_all = j.at("overall_all").get<double>();
  if (!j.at("held_out").is_null()) r.held_out = j.at("held_out").get<double>();
  return r;
}

std::string report_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "client,role,f1\n";
  for (const auto& c : report.clients) out << c.client_id << ',' << synthdata::to_string(c.role) << ',' << c.f1 << '\n';
  out << "overall_unlabeled,aggregate," << report.overall_unlabeled << '\n';
  out << "overall_all,aggregate," << report.overall_all << '\n';
  if (report.held_out) out << "held_out,held_out," << *report.held_out << '\n';
  return out.str();
}

}  // namespace fedcy::metrics
