#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <ostream>

#include "fedcy/cli.hpp"

namespace fedcy::cli {

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Federated semi-supervised phase recognition simulator", "fedcy"};
  app.require_subcommand(1);

  std::string config_path, mode_name, out_path;
  std::uint64_t seed = 0;
  std::vector<std::string> runs;
  GradcheckOptions gc;

  auto* generate = app.add_subcommand("generate", "Write a synthetic scenario to disk");
  generate->add_option("--config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);
  generate->add_option("--out", out_path, "Dataset directory (default: paths.data_dir)");

  auto* train = app.add_subcommand("train", "Train one mode on generated datasets");
  train->add_option("--config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);
  train->add_option("--mode", mode_name, "fedcy, fedcy_no_cont, fedtcc, fullsup_labeled_only or fedavg_fullsup");
  auto* seed_opt = train->add_option("--seed", seed, "Training seed (default: federation.seed)");
  train->add_option("--out", out_path, "Run directory (default: <paths.out_dir>/<mode>_seed<seed>)");

  auto* compare = app.add_subcommand("compare", "Aggregate finished runs into a comparison table");
  compare->add_option("--runs", runs, "Run directories")->required()->expected(1, -1);
  compare->add_option("--out", out_path, "Also write the table as CSV here");

  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic and numeric loss gradients");
  gradcheck->add_option("--component", gc.component, "all or one of the loss components");
  gradcheck->add_option("--seed", gc.seed, "Instance seed");
  gradcheck->add_option("--instances", gc.instances, "Random instances per component");
  gradcheck->add_flag("--corrupt-gradient", gc.corrupt, "Perturb the analytic gradient (self-test)")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*generate) {
      const ExperimentConfig cfg = load_config(config_path);
      const fs::path dir = out_path.empty() ? fs::path(cfg.data_dir) : fs::path(out_path);
      cmd_generate(cfg, dir);
      out << "wrote " << (2 + cfg.scenario.num_unlabeled) << " client datasets to " << dir.string() << '\n';
    } else if (*train) {
      const ExperimentConfig cfg = load_config(config_path);
      const federation::Mode mode = mode_name.empty() ? cfg.federation.mode : federation::mode_from_string(mode_name);
      if (!*seed_opt) seed = cfg.federation.master_seed;
      const fs::path dir = out_path.empty()
                               ? fs::path(cfg.out_dir) / (federation::to_string(mode) + "_seed" + std::to_string(seed))
                               : fs::path(out_path);
      const TrainOutcome o = cmd_train(cfg, mode, seed, dir);
      out << std::fixed << std::setprecision(4) << federation::to_string(mode) << " seed " << seed << ": "
          << o.training.reports.size() << " rounds, best round " << o.training.best_round << " (validation F1 "
          << o.training.best_validation_f1 << "), test overall_unlabeled " << o.evaluation.overall_unlabeled
          << ", overall_all " << o.evaluation.overall_all;
      if (o.evaluation.held_out) out << ", held_out " << *o.evaluation.held_out;
      out << "\nrun directory: " << dir.string() << '\n';
    } else if (*compare) {
      std::vector<fs::path> dirs(runs.begin(), runs.end());
      const Comparison c = cmd_compare(dirs);
      out << format_table(c);
      if (!out_path.empty()) {
        std::ofstream csv(out_path);
        if (!csv) throw std::runtime_error("cannot write " + out_path);
        csv << format_csv(c);
      }
    } else if (*gradcheck) {
      bool ok = true;
      for (const auto& r : run_gradcheck(gc)) {
        const bool pass = r.failures == 0;
        ok = ok && pass;
        out << std::left << std::setw(18) << r.component << (pass ? "PASS" : "FAIL") << "  instances "
            << r.instances << "  failures " << r.failures << "  max relative error " << std::scientific
            << std::setprecision(3) << r.max_relative_error << std::defaultfloat << '\n';
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace fedcy::cli
