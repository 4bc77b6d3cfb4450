#include <chrono>
#include <cmath>
#include <future>
#include <stdexcept>

#include "fedcy/federation.hpp"
#include "fedcy/metrics.hpp"
#include "fedcy/rng.hpp"

namespace fedcy::federation {

using synthdata::Role;
using synthdata::Split;

std::string to_string(Mode m) {
  switch (m) {
    case Mode::fedcy: return "fedcy";
    case Mode::fedcy_no_cont: return "fedcy_no_cont";
    case Mode::fedtcc: return "fedtcc";
    case Mode::fullsup_labeled_only: return "fullsup_labeled_only";
    case Mode::fedavg_fullsup: return "fedavg_fullsup";
  }
  return "fedcy";
}

Mode mode_from_string(const std::string& s) {
  for (Mode m : {Mode::fedcy, Mode::fedcy_no_cont, Mode::fedtcc, Mode::fullsup_labeled_only, Mode::fedavg_fullsup}) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown mode '" + s +
                              "' (expected fedcy, fedcy_no_cont, fedtcc, fullsup_labeled_only or fedavg_fullsup)");
}

std::string to_string(Stage s) { return s == Stage::pretrain ? "pretrain" : "train"; }

void FederationConfig::validate() const {
  if (rounds_max < 1) throw std::invalid_argument("federation.rounds_max must be at least 1");
  if (min_epochs < 0) throw std::invalid_argument("federation.min_epochs must be nonnegative");
  if (patience < 1) throw std::invalid_argument("federation.patience must be at least 1");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("federation.learning_rate must be nonnegative");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("federation.weight_decay must be nonnegative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("federation.beta1 and beta2 must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("federation.epsilon must be positive");
  if (labeled_batch_size < 1) throw std::invalid_argument("federation.labeled_batch_size must be positive");
  if (clip_batch_size < 2) throw std::invalid_argument("federation.clip_batch_size must be at least 2");
  if (pretrain_rounds < 0) throw std::invalid_argument("federation.pretrain_rounds must be nonnegative");
  sampler.validate();
  tcc.validate();
  contrastive.validate();
}

losses::ContrastiveConfig FederationConfig::effective_contrastive() const {
  losses::ContrastiveConfig c = contrastive;
  if (mode != Mode::fedcy) c.lambda_c = 0.0;
  return c;
}

TrainingData make_training_data(const synthdata::Scenario& scenario, Mode mode) {
  TrainingData data;
  const auto& lab = scenario.labeled;
  ClientData labeled{lab.id(), Role::labeled, synthdata::labeled_view(lab, Split::train), std::nullopt};
  if (mode == Mode::fedtcc) labeled.unlabeled = synthdata::unlabeled_view(lab, Split::train);
  data.clients.push_back(std::move(labeled));
  if (mode != Mode::fullsup_labeled_only) {
    for (const auto& c : scenario.unlabeled) {
      ClientData cd{c.id(), Role::unlabeled, std::nullopt, std::nullopt};
      if (mode == Mode::fedavg_fullsup) {
        cd.labeled = synthdata::labeled_view(c, Split::train);
      } else {
        cd.unlabeled = synthdata::unlabeled_view(c, Split::train);
      }
      data.clients.push_back(std::move(cd));
    }
  }
  data.validation = synthdata::labeled_view(lab, Split::validation);
  return data;
}

ParameterSet aggregate(std::span<const ParameterSet> local, std::span<const double> weights,
                       std::size_t labeled_index, bool average_theta) {
  if (local.empty()) throw std::invalid_argument("aggregate: no local models");
  if (weights.size() != local.size()) throw std::invalid_argument("aggregate: one weight per local model required");
  if (labeled_index >= local.size()) throw std::invalid_argument("aggregate: labeled index out of range");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("aggregate: weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("aggregate: weights sum to " + std::to_string(total) + ", not 1");
  }
  const ParameterSet& first = local.front();
  const auto check_shapes = [&](const NamedArrays& ref, const NamedArrays& other) {
    if (ref.size() != other.size()) throw engine::ShapeError("aggregate: parameter sets differ");
    for (const auto& [name, a] : ref) {
      const auto it = other.find(name);
      if (it == other.end() || it->second.shape() != a.shape()) {
        throw engine::ShapeError("aggregate: shape mismatch for " + name);
      }
    }
  };
  for (const auto& p : local) {
    check_shapes(first.omega, p.omega);
    check_shapes(first.theta, p.theta);
  }

  const auto average = [&](NamedArrays ParameterSet::*group) {
    NamedArrays out;
    for (const auto& [name, a] : first.*group) {
      Array acc(a.shape(), 0.0);
      auto dst = acc.data();
      for (std::size_t j = 0; j < local.size(); ++j) {
        const auto src = (local[j].*group).at(name).data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += weights[j] * src[i];
      }
      out.emplace(name, std::move(acc));
    }
    return out;
  };

  ParameterSet global;
  global.config = first.config;
  global.omega = average(&ParameterSet::omega);
  global.theta = average_theta ? average(&ParameterSet::theta) : local[labeled_index].theta;
  return global;
}

nlohmann::json to_json(const RoundReport& r) {
  nlohmann::json losses = nlohmann::json::object();
  for (const auto& c : r.client_losses) losses[c.client_id] = c.mean_loss;
  return {{"round", r.round},           {"stage", to_string(r.stage)},   {"client_losses", losses},
          {"validation_f1", r.validation_f1}, {"early_stop", r.early_stop}, {"seconds", r.seconds}};
}

Federation init_federation(const FederationConfig& cfg, const model::ModelConfig& model, TrainingData data,
                           Stage initial) {
  cfg.validate();
  model.validate();
  if (data.clients.empty()) throw std::invalid_argument("federation needs at least one client");
  Federation fed;
  fed.cfg = cfg;
  fed.model = model;
  fed.data = std::move(data);
  fed.global = model::init_params(model, derive_seed(cfg.master_seed, {stream::kInit}));
  for (const auto& c : fed.data.clients) fed.clients.push_back(ClientState{c, fed.global, {}, 0.0});
  fed.stopper = EarlyStopping(cfg.min_epochs, cfg.patience);
  enter_stage(fed, initial);
  return fed;
}

namespace {

enum class Task { idle, supervised, unsupervised };

Task task_for(const Federation& fed, const ClientState& c) {
  if (fed.stage == Stage::pretrain) return c.data.unlabeled ? Task::unsupervised : Task::idle;
  switch (fed.cfg.mode) {
    case Mode::fedcy:
    case Mode::fedcy_no_cont:
      return c.data.role == Role::labeled ? Task::supervised : Task::unsupervised;
    case Mode::fedtcc:
    case Mode::fullsup_labeled_only:
      return c.data.role == Role::labeled ? Task::supervised : Task::idle;
    case Mode::fedavg_fullsup:
      return Task::supervised;
  }
  return Task::idle;
}

std::size_t training_frames(const ClientState& c, Task t) {
  if (t == Task::supervised) return c.data.labeled->labels.size();
  if (t == Task::unsupervised) return c.data.unlabeled->frame_count();
  return 0;
}

}  // namespace

void enter_stage(Federation& fed, Stage stage) {
  fed.stage = stage;
  fed.stage_round = 0;
  std::size_t total = 0;
  for (auto& c : fed.clients) {
    const Task t = task_for(fed, c);
    if (t == Task::supervised && !c.data.labeled) {
      throw std::invalid_argument("client '" + c.data.client_id + "' has no labels for supervised training");
    }
    if (t == Task::unsupervised && !c.data.unlabeled) {
      throw std::invalid_argument("client '" + c.data.client_id + "' has no frames for unsupervised training");
    }
    total += training_frames(c, t);
    c.optimizer = AdamState{};
  }
  if (total == 0) throw std::invalid_argument("no training frames in this stage");
  if (stage == Stage::train && fed.data.validation.labels.empty()) {
    throw std::invalid_argument("training stage needs the labeled client's validation frames");
  }
  for (auto& c : fed.clients) {
    c.weight = static_cast<double>(training_frames(c, task_for(fed, c))) / static_cast<double>(total);
  }
}

RoundReport run_round(Federation& fed) {
  const auto start = std::chrono::steady_clock::now();
  ++fed.round;
  ++fed.stage_round;
  const losses::ContrastiveConfig contrastive = fed.cfg.effective_contrastive();
  const std::uint64_t stage_tag = fed.stage == Stage::pretrain ? stream::kPretrain : stream::kLocalEpoch;

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < fed.clients.size(); ++i) {
    if (task_for(fed, fed.clients[i]) != Task::idle) active.push_back(i);
  }

  const auto work = [&](std::size_t i) {
    ClientState& c = fed.clients[i];
    c.params = fed.global;  // broadcast
    Rng rng = derive_rng(fed.cfg.master_seed, {stage_tag, static_cast<std::uint64_t>(fed.stage_round), i});
    if (task_for(fed, c) == Task::supervised) {
      return local_supervised_epoch(c.params, c.optimizer, *c.data.labeled, fed.cfg, contrastive, rng).mean_loss;
    }
    return local_unsupervised_epoch(c.params, c.optimizer, *c.data.unlabeled, fed.cfg, rng).mean_loss;
  };

  std::vector<double> losses(active.size());
  if (fed.cfg.parallel && active.size() > 1) {
    std::vector<std::future<double>> jobs;
    for (std::size_t i : active) jobs.push_back(std::async(std::launch::async, work, i));
    for (std::size_t j = 0; j < jobs.size(); ++j) jobs[j].wait();
    for (std::size_t j = 0; j < jobs.size(); ++j) losses[j] = jobs[j].get();
  } else {
    for (std::size_t j = 0; j < active.size(); ++j) losses[j] = work(active[j]);
  }

  std::vector<ParameterSet> local;
  std::vector<double> weights;
  std::size_t labeled_index = 0;
  for (std::size_t j = 0; j < active.size(); ++j) {
    const ClientState& c = fed.clients[active[j]];
    if (c.data.role == Role::labeled) labeled_index = j;
    local.push_back(c.params);
    weights.push_back(c.weight);
  }
  const bool average_theta = fed.cfg.mode == Mode::fedavg_fullsup && fed.stage == Stage::train;
  fed.global = aggregate(local, weights, labeled_index, average_theta);
  if (fed.on_aggregate) {
    fed.on_aggregate(AggregationEvent{fed.round, fed.stage, std::move(local), std::move(weights), labeled_index,
                                      average_theta, &fed.global});
  }

  RoundReport report;
  report.round = fed.round;
  report.stage = fed.stage;
  for (std::size_t j = 0; j < active.size(); ++j) {
    report.client_losses.push_back({fed.clients[active[j]].data.client_id, losses[j]});
  }
  if (!fed.data.validation.labels.empty()) {
    const auto predictions = model::predict_phases(fed.global, fed.data.validation.frames);
    report.validation_f1 = metrics::macro_f1(predictions, fed.data.validation.labels, fed.model.num_phases);
  }
  if (fed.stage == Stage::train) report.early_stop = fed.stopper.update(report.validation_f1);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

TrainingResult run_training(const FederationConfig& cfg, const model::ModelConfig& model, TrainingData data,
                            const RoundCallback& on_round,
                            const std::function<void(const AggregationEvent&)>& on_aggregate) {
  const bool pretrain = cfg.mode == Mode::fedtcc && cfg.pretrain_rounds > 0;
  Federation fed = init_federation(cfg, model, std::move(data), pretrain ? Stage::pretrain : Stage::train);
  fed.on_aggregate = on_aggregate;
  TrainingResult result;
  const auto record = [&](RoundReport r) {
    if (on_round) on_round(r, fed.global);
    result.reports.push_back(std::move(r));
  };

  if (pretrain) {
    for (int r = 0; r < cfg.pretrain_rounds; ++r) record(run_round(fed));
    enter_stage(fed, Stage::train);
  }

  for (int r = 0; r < cfg.rounds_max; ++r) {
    RoundReport report = run_round(fed);
    const bool stop = report.early_stop;
    if (fed.stopper.last_improved()) {
      result.best = fed.global;
      result.best_round = report.round;
      result.best_validation_f1 = report.validation_f1;
    }
    record(std::move(report));
    if (stop) break;
  }
  result.final_params = fed.global;
  return result;
}

}  // namespace fedcy::federation
