#include "fedcy/cli.hpp"

#include "doctest.h"

#include <fstream>
#include <random>
#include <sstream>

using namespace fedcy;
using namespace fedcy::cli;
using nlohmann::json;

namespace {

const char* kTinyConfig = R"({
  "format_version": 1,
  "kind": "fedcy.experiment",
  "scenario": {
    "seed": 3,
    "num_unlabeled": 2,
    "labeled_videos": {"train": 2, "validation": 1, "test": 1},
    "unlabeled_videos": {"train": 2, "validation": 1, "test": 1},
    "held_out_videos": {"train": 0, "validation": 0, "test": 1}
  },
  "model": {"hidden_dims": [8], "embed_dim": 4},
  "federation": {
    "rounds_max": 2,
    "min_epochs": 1,
    "patience": 1,
    "pretrain_rounds": 1,
    "learning_rate": 0.001
  },
  "contrastive": {"lambda_c": 5.0}
})";

// Fresh directory under the system temp dir, removed on scope exit.
struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("fedcy_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json first_report(const fs::path& run_dir) {
  const std::string text = slurp(run_dir / "reports.jsonl");
  return json::parse(text.substr(0, text.find('\n')));
}

ExperimentConfig tiny(const fs::path& root) {
  ExperimentConfig c = config_from_text(kTinyConfig, "tiny.json");
  c.data_dir = (root / "data").string();
  c.out_dir = (root / "runs").string();
  return c;
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "fedcy");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int status = run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return status;
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("defaults") {
    const auto c = config_from_text("{}");
    CHECK(c.scenario_seed == 7);
    CHECK(c.federation.mode == federation::Mode::fedcy);
    CHECK(c.model().input_dim == c.scenario.input_dim);
    CHECK(c.model().num_phases == static_cast<std::size_t>(c.scenario.workflow.num_phases));
  }
  SUBCASE("unknown key reports its line and path") {
    const std::string text = "{\n  \"federation\": {\n    \"rounds_max\": 3,\n    \"learing_rate\": 0.1\n  }\n}\n";
    try {
      config_from_text(text, "typo.json");
      FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.source() == "typo.json");
      CHECK(e.line() == 4);
      CHECK(e.field() == "federation.learing_rate");
      CHECK(std::string(e.what()).find("typo.json:4") == 0);
    }
  }
  SUBCASE("wrong type") {
    try {
      config_from_text("{\"model\": {\"embed_dim\": \"wide\"}}");
      FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "model.embed_dim");
      CHECK(e.line() == 1);
    }
  }
  SUBCASE("out-of-range value and bad enum") {
    CHECK_THROWS_AS(config_from_text("{\"federation\": {\"patience\": 0}}"), ConfigError);
    CHECK_THROWS_AS(config_from_text("{\"federation\": {\"mode\": \"fedprox\"}}"), ConfigError);
    CHECK_THROWS_AS(config_from_text("{\"kind\": \"other\"}"), ConfigError);
    CHECK_THROWS_AS(config_from_text("{\"format_version\": 2}"), ConfigError);
  }
  SUBCASE("syntax error") {
    try {
      config_from_text("{\n\"model\": {\n,\n}", "bad.json");
      FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("resolved config round-trips") {
    const auto c = config_from_text(kTinyConfig);
    const json j = config_to_json(c);
    CHECK(config_to_json(config_from_text(j.dump(2))) == j);
    CHECK(j["contrastive"]["lambda_c"] == 5.0);
    CHECK(j["federation"]["rounds_max"] == 2);
  }
  SUBCASE("shipped desk config loads") {
    const auto c = load_config(fs::path(FEDCY_SOURCE_DIR) / "configs" / "desk.json");
    CHECK(c.federation.learning_rate == 1e-3);
    CHECK(c.federation.contrastive.lambda_c == 0.1);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("generate") {
  TempDir tmp;
  const auto cfg = tiny(tmp.path);
  cmd_generate(cfg, tmp.path / "a");
  cmd_generate(cfg, tmp.path / "b");
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(tmp.path / "a")) {
    ++files;
    CHECK(slurp(entry.path()) == slurp(tmp.path / "b" / entry.path().filename()));
  }
  CHECK(files == 2 + 4);  // manifest, config, four clients

  const json manifest = json::parse(slurp(tmp.path / "a" / "manifest.json"));
  REQUIRE(manifest["clients"].size() == 4);
  CHECK(manifest["clients"][0]["role"] == "labeled");
  CHECK(manifest["clients"][3]["role"] == "held_out");
  CHECK(manifest["clients"][1]["videos"] == 4);

  // Every stored video obeys the workflow.
  for (const auto& c : manifest["clients"]) {
    const auto client = synthdata::client_from_json(json::parse(slurp(tmp.path / "a" / c["file"].get<std::string>())));
    for (const auto& v : client.videos) CHECK(synthdata::validate_workflow(v.labels, cfg.scenario.workflow));
  }

  std::ofstream(tmp.path / "blocker") << "x";
  CHECK_THROWS(cmd_generate(cfg, tmp.path / "blocker" / "sub"));
}

TEST_CASE("train and compare") {
  TempDir tmp;
  auto cfg = tiny(tmp.path);
  cmd_generate(cfg, cfg.data_dir);

  SUBCASE("fullsup reads only the labeled client during training") {
    const auto o = cmd_train(cfg, federation::Mode::fullsup_labeled_only, 1, tmp.path / "full");
    std::istringstream log(slurp(tmp.path / "full" / "access_log.jsonl"));
    std::string line;
    int train_reads = 0;
    while (std::getline(log, line)) {
      const json e = json::parse(line);
      if (e["phase"] == "train") {
        ++train_reads;
        CHECK(e["client_id"] == "labeled");
      }
    }
    CHECK(train_reads == 1);
    for (const char* f : {"config.json", "reports.jsonl", "checkpoint_best.json", "evaluation.json", "evaluation.csv"})
      CHECK(fs::exists(tmp.path / "full" / f));
    CHECK(o.evaluation.clients.size() == 3);
    CHECK(o.evaluation.held_out.has_value());
  }

  SUBCASE("reruns reproduce the checkpoint bit-exactly") {
    cmd_train(cfg, federation::Mode::fedcy, 4, tmp.path / "r1");
    cmd_train(cfg, federation::Mode::fedcy, 4, tmp.path / "r2");
    CHECK(slurp(tmp.path / "r1" / "checkpoint_best.json") == slurp(tmp.path / "r2" / "checkpoint_best.json"));
  }

  SUBCASE("fedcy_no_cont ignores the configured lambda_c") {
    cmd_train(cfg, federation::Mode::fedcy_no_cont, 2, tmp.path / "a");
    auto zero = cfg;
    zero.federation.contrastive.lambda_c = 0.0;
    cmd_train(zero, federation::Mode::fedcy_no_cont, 2, tmp.path / "b");
    CHECK(slurp(tmp.path / "a" / "checkpoint_best.json") == slurp(tmp.path / "b" / "checkpoint_best.json"));
    // fedcy does use it.
    cmd_train(cfg, federation::Mode::fedcy, 2, tmp.path / "c");
    cmd_train(zero, federation::Mode::fedcy, 2, tmp.path / "d");
    CHECK(first_report(tmp.path / "c")["client_losses"] != first_report(tmp.path / "d")["client_losses"]);
  }

  SUBCASE("compare") {
    cmd_train(cfg, federation::Mode::fedcy, 1, tmp.path / "f1");
    cmd_train(cfg, federation::Mode::fedcy, 2, tmp.path / "f2");
    cmd_train(cfg, federation::Mode::fullsup_labeled_only, 1, tmp.path / "s1");

    const auto single = cmd_compare({tmp.path / "s1"});
    REQUIRE(single.rows.size() == 1);
    for (const auto& f : single.rows[0].fields) CHECK(f.stats.std == 0.0);

    const auto c = cmd_compare({tmp.path / "f1", tmp.path / "s1", tmp.path / "f2"});
    CHECK(c.columns ==
          std::vector<std::string>{"labeled", "unlabeled_1", "unlabeled_2", "overall_unlabeled", "overall_all", "held_out"});
    REQUIRE(c.rows.size() == 2);
    CHECK(c.rows[0].mode == "fedcy");
    CHECK(c.rows[0].runs == 2);
    CHECK(c.rows[1].mode == "fullsup_labeled_only");
    for (const auto& row : c.rows) {
      const auto& f = row.fields;
      CHECK(std::abs(f[3].stats.mean - (f[1].stats.mean + f[2].stats.mean) / 2.0) < 1e-12);
      CHECK(std::abs(f[4].stats.mean - (f[0].stats.mean + f[1].stats.mean + f[2].stats.mean) / 3.0) < 1e-12);
    }

    const std::string table = format_table(c);
    std::istringstream lines(table);
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) {
      ++count;
      CHECK(line.back() != ' ');
    }
    CHECK(count == 4);  // header, rule, two modes
    CHECK(table.find("±") != std::string::npos);

    const std::string csv = format_csv(c);
    CHECK(csv.substr(0, csv.find('\n')) ==
          "mode,runs,labeled_mean,labeled_std,unlabeled_1_mean,unlabeled_1_std,unlabeled_2_mean,unlabeled_2_std,"
          "overall_unlabeled_mean,overall_unlabeled_std,overall_all_mean,overall_all_std,held_out_mean,held_out_std");

    fs::create_directories(tmp.path / "empty");
    CHECK_THROWS(cmd_compare({tmp.path / "empty"}));
    CHECK_THROWS(cmd_compare({}));
  }

  SUBCASE("missing datasets") {
    auto other = cfg;
    other.data_dir = (tmp.path / "nothing").string();
    CHECK_THROWS(cmd_train(other, federation::Mode::fedcy, 1, tmp.path / "x"));
  }
}

TEST_CASE("command line") {
  TempDir tmp;
  const fs::path config = tmp.path / "tiny.json";
  auto cfg = tiny(tmp.path);
  write_config(config, cfg);

  std::string out, err;
  CHECK(run_cli({"generate", "--config", config.string()}, &out) == 0);
  CHECK(out.find("wrote 4 client datasets") != std::string::npos);
  CHECK(run_cli({"train", "--config", config.string(), "--mode", "fedprox"}, &out, &err) == 1);
  CHECK(err.find("unknown mode") != std::string::npos);
  CHECK(run_cli({"train", "--config", config.string(), "--mode", "fullsup_labeled_only", "--seed", "3"}, &out) == 0);
  const fs::path run_dir = fs::path(cfg.out_dir) / "fullsup_labeled_only_seed3";
  CHECK(fs::exists(run_dir / "evaluation.json"));
  const fs::path csv = tmp.path / "cmp.csv";
  CHECK(run_cli({"compare", "--runs", run_dir.string(), "--out", csv.string()}, &out) == 0);
  CHECK(out.find("fullsup_labeled_only") != std::string::npos);
  CHECK(fs::exists(csv));
  CHECK(run_cli({"compare", "--runs", (tmp.path / "nope").string()}, &out, &err) == 1);

  std::ofstream(tmp.path / "typo.json") << "{\n  \"paths\": {\"dataa_dir\": \"x\"}\n}\n";
  CHECK(run_cli({"generate", "--config", (tmp.path / "typo.json").string()}, &out, &err) == 1);
  CHECK(err.find(":2: paths.dataa_dir") != std::string::npos);

  CHECK(run_cli({}, &out, &err) != 0);
}

TEST_CASE("gradcheck") {
  const auto names = gradcheck_components();
  CHECK(names == std::vector<std::string>{"tcc_pair", "tcc_batch", "ntxent", "supcon", "cross_entropy",
                                          "labeled_objective"});
  GradcheckOptions opts;
  opts.instances = 3;
  opts.component = "ntxent";
  auto results = run_gradcheck(opts);
  REQUIRE(results.size() == 1);
  CHECK(results[0].component == "ntxent");
  CHECK(results[0].instances == 3);
  CHECK(results[0].failures == 0);
  CHECK(results[0].max_relative_error < 1e-4);

  opts.corrupt = true;
  CHECK(run_gradcheck(opts)[0].failures == 3);
  opts.component = "softmax";
  CHECK_THROWS(run_gradcheck(opts));

  std::string out;
  CHECK(run_cli({"gradcheck", "--component", "supcon", "--instances", "2"}, &out) == 0);
  CHECK(out.find("PASS") != std::string::npos);
  CHECK(run_cli({"gradcheck", "--component", "supcon", "--instances", "2", "--corrupt-gradient"}, &out) == 1);
  CHECK(out.find("FAIL") != std::string::npos);
  CHECK(run_cli({"gradcheck", "--component", "nothing"}) == 1);
}
