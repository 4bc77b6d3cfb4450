#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "fedcy/cli.hpp"

namespace fedcy::cli {

using nlohmann::json;
using synthdata::Role;

namespace {

inline constexpr int kManifestFormatVersion = 1;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return json::parse(in);
}

std::string client_file(const std::string& id) { return "client_" + id + ".json"; }

json scenario_identity(const ExperimentConfig& cfg) {
  return {{"seed", cfg.scenario_seed}, {"config", synthdata::to_json(cfg.scenario)}};
}

// Dataset directory reader that records every file it opens.
class DataStore {
 public:
  DataStore(fs::path dir, std::ostream& log) : dir_(std::move(dir)), log_(log) {}

  json manifest() {
    const fs::path path = dir_ / "manifest.json";
    if (!fs::exists(path)) {
      throw std::runtime_error("missing datasets: " + path.string() + " not found (run generate first)");
    }
    record("setup", path, "");
    return read_json(path);
  }

  synthdata::ClientDataset client(const std::string& id, const std::string& phase) {
    const fs::path path = dir_ / client_file(id);
    if (!fs::exists(path)) throw std::runtime_error("missing dataset file " + path.string());
    record(phase, path, id);
    return synthdata::client_from_json(read_json(path));
  }

 private:
  void record(const std::string& phase, const fs::path& path, const std::string& id) {
    log_ << json{{"phase", phase}, {"file", path.filename().string()}, {"client_id", id}}.dump() << '\n';
  }

  fs::path dir_;
  std::ostream& log_;
};

std::vector<synthdata::ClientDataset*> all_clients(synthdata::Scenario& sc) {
  std::vector<synthdata::ClientDataset*> out{&sc.labeled};
  for (auto& c : sc.unlabeled) out.push_back(&c);
  out.push_back(&sc.held_out);
  return out;
}

}  // namespace

void cmd_generate(const ExperimentConfig& cfg, const fs::path& out) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw std::runtime_error("cannot create output directory " + out.string());

  synthdata::Scenario sc = synthdata::generate_scenario(cfg.scenario, cfg.scenario_seed);
  json clients = json::array();
  for (auto* c : all_clients(sc)) {
    for (const auto& v : c->videos) {
      if (!synthdata::validate_workflow(v.labels, cfg.scenario.workflow)) {
        throw std::logic_error("generated video " + v.id + " breaks the workflow ordering rule");
      }
    }
    write_text(out / client_file(c->id()), synthdata::client_to_json(*c).dump() + "\n");
    clients.push_back({{"client_id", c->id()},
                       {"role", synthdata::to_string(c->role())},
                       {"file", client_file(c->id())},
                       {"videos", c->videos.size()},
                       {"frames",
                        {{"train", c->frame_count(synthdata::Split::train)},
                         {"validation", c->frame_count(synthdata::Split::validation)},
                         {"test", c->frame_count(synthdata::Split::test)}}}});
  }
  json manifest{{"format_version", kManifestFormatVersion},
                {"kind", "fedcy.manifest"},
                {"scenario", scenario_identity(cfg)},
                {"clients", std::move(clients)}};
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  write_config(out / "config.json", cfg);
}

TrainOutcome cmd_train(ExperimentConfig cfg, federation::Mode mode, std::uint64_t seed, const fs::path& run_dir) {
  cfg.federation.mode = mode;
  cfg.federation.master_seed = seed;
  cfg.validate();

  std::error_code ec;
  fs::create_directories(run_dir, ec);
  if (ec || !fs::is_directory(run_dir)) throw std::runtime_error("cannot create run directory " + run_dir.string());
  std::ofstream access(run_dir / "access_log.jsonl");
  DataStore store(cfg.data_dir, access);

  const json manifest = store.manifest();
  if (manifest.value("kind", "") != "fedcy.manifest" || manifest.at("format_version") != kManifestFormatVersion) {
    throw std::runtime_error("unsupported dataset manifest in " + cfg.data_dir);
  }
  if (manifest.at("scenario") != scenario_identity(cfg)) {
    throw std::runtime_error("datasets in " + cfg.data_dir + " were generated from a different scenario config");
  }
  std::vector<std::string> unlabeled_ids;
  std::string labeled_id, held_out_id;
  for (const auto& c : manifest.at("clients")) {
    const auto role = synthdata::role_from_string(c.at("role").get<std::string>());
    const auto id = c.at("client_id").get<std::string>();
    if (role == Role::labeled) labeled_id = id;
    if (role == Role::unlabeled) unlabeled_ids.push_back(id);
    if (role == Role::held_out) held_out_id = id;
  }

  write_config(run_dir / "config.json", cfg);

  // Training reads only what the mode is allowed to see.
  synthdata::Scenario sc;
  sc.config = cfg.scenario;
  sc.master_seed = cfg.scenario_seed;
  sc.labeled = store.client(labeled_id, "train");
  if (mode != federation::Mode::fullsup_labeled_only) {
    for (const auto& id : unlabeled_ids) sc.unlabeled.push_back(store.client(id, "train"));
  }

  std::ofstream reports(run_dir / "reports.jsonl");
  TrainOutcome outcome;
  outcome.run_dir = run_dir;
  outcome.training = federation::run_training(
      cfg.federation, cfg.model(), federation::make_training_data(sc, mode),
      [&](const federation::RoundReport& r, const model::ParameterSet&) {
        reports << federation::to_json(r).dump() << '\n';
        reports.flush();
      });

  const json lineage{{"mode", federation::to_string(mode)},
                     {"seed", seed},
                     {"scenario_seed", cfg.scenario_seed},
                     {"best_round", outcome.training.best_round},
                     {"best_validation_f1", outcome.training.best_validation_f1}};
  model::save_checkpoint((run_dir / "checkpoint_best.json").string(), outcome.training.best, lineage);

  if (sc.unlabeled.empty()) {
    for (const auto& id : unlabeled_ids) sc.unlabeled.push_back(store.client(id, "evaluate"));
  }
  sc.held_out = store.client(held_out_id, "evaluate");
  outcome.evaluation = metrics::evaluate_scenario(outcome.training.best, sc, synthdata::Split::test,
                                                  federation::to_string(mode), seed);
  write_text(run_dir / "evaluation.json", metrics::report_to_json(outcome.evaluation).dump(2) + "\n");
  write_text(run_dir / "evaluation.csv", metrics::report_csv(outcome.evaluation));
  return outcome;
}

Comparison cmd_compare(const std::vector<fs::path>& run_dirs) {
  if (run_dirs.empty()) throw std::invalid_argument("compare needs at least one run directory");
  std::vector<std::string> order;
  std::map<std::string, std::vector<metrics::EvaluationReport>> by_mode;
  for (const auto& dir : run_dirs) {
    const fs::path path = dir / "evaluation.json";
    if (!fs::exists(path)) throw std::runtime_error("incomplete run directory " + dir.string() + ": no evaluation.json");
    auto report = metrics::report_from_json(read_json(path));
    if (!by_mode.count(report.mode)) order.push_back(report.mode);
    by_mode[report.mode].push_back(std::move(report));
  }
  Comparison c;
  c.columns = metrics::report_columns(by_mode[order.front()].front());
  for (const auto& mode : order) {
    const auto& reports = by_mode[mode];
    if (metrics::report_columns(reports.front()) != c.columns) {
      throw std::runtime_error("runs of mode " + mode + " were evaluated on different clients");
    }
    c.rows.push_back({mode, reports.size(), metrics::aggregate_runs(reports)});
  }
  return c;
}

std::string format_table(const Comparison& c) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"mode", "runs"};
  header.insert(header.end(), c.columns.begin(), c.columns.end());
  cells.push_back(header);
  for (const auto& row : c.rows) {
    std::vector<std::string> line{row.mode, std::to_string(row.runs)};
    for (const auto& f : row.fields) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(4) << f.stats.mean << " ± " << f.stats.std;
      line.push_back(cell.str());
    }
    cells.push_back(line);
  }
  // "±" is two bytes but one column wide.
  const auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char ch : s) w += (ch & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], width(line[i]));
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t i = 0; i < cells[r].size(); ++i) {
      if (i) out << "  ";
      out << cells[r][i];
      if (i + 1 < cells[r].size()) out << std::string(widths[i] - width(cells[r][i]), ' ');
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : widths) total += w + 2;
      out << std::string(total - 2, '-') << '\n';
    }
  }
  return out.str();
}

std::string format_csv(const Comparison& c) {
  std::ostringstream out;
  out << std::setprecision(17) << "mode,runs";
  for (const auto& col : c.columns) out << ',' << col << "_mean," << col << "_std";
  out << '\n';
  for (const auto& row : c.rows) {
    out << row.mode << ',' << row.runs;
    for (const auto& f : row.fields) out << ',' << f.stats.mean << ',' << f.stats.std;
    out << '\n';
  }
  return out.str();
}

}  // namespace fedcy::cli
