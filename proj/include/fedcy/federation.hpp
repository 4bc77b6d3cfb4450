#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedcy/losses.hpp"
#include "fedcy/model.hpp"
#include "fedcy/sampling.hpp"
#include "fedcy/synthdata.hpp"

namespace fedcy::federation {

using engine::Array;
using model::NamedArrays;
using model::ParameterSet;
using Rng = std::mt19937_64;

enum class Mode { fedcy, fedcy_no_cont, fedtcc, fullsup_labeled_only, fedavg_fullsup };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct FederationConfig {
  Mode mode = Mode::fedcy;
  int rounds_max = 30;
  int min_epochs = 6;
  int patience = 3;
  double learning_rate = 5e-5;
  double weight_decay = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t labeled_batch_size = 64;
  std::size_t clip_batch_size = 2;  // |B|
  sampling::SamplerConfig sampler;  // clip size k lives here
  losses::TccConfig tcc;
  losses::ContrastiveConfig contrastive;
  int pretrain_rounds = 30;  // fedtcc only
  std::uint64_t master_seed = 0;
  bool parallel = true;

  void validate() const;

  /// Contrastive settings actually used by the labeled client in this mode:
  /// every mode except fedcy trains with lambda_c = 0.
  losses::ContrastiveConfig effective_contrastive() const;
};

// Optimizer ----------------------------------------------------------------------

struct AdamState {
  NamedArrays m;
  NamedArrays v;
  long step = 0;
};

struct AdamConfig {
  double learning_rate = 5e-5;
  double weight_decay = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamConfig adam_config(const FederationConfig& cfg);

/// One bias-corrected Adam step with decoupled decay on every array of
/// `params` that has a gradient:
///   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + wd * p)
void adam_step(NamedArrays& params, const engine::Gradients& grads, AdamState& state, const AdamConfig& cfg);

/// Same, as a single step over omega and (optionally) theta together.
void adam_step(ParameterSet& params, const engine::Gradients& grads, AdamState& state, const AdamConfig& cfg,
               bool include_theta);

// Early stopping -----------------------------------------------------------------

/// Tracks validation scores round by round. A round improves when its score
/// is strictly above every earlier one (round 1 always improves). Rounds up
/// to min_epochs never count as stale; after that, training stops once
/// `patience` consecutive rounds fail to improve.
class EarlyStopping {
 public:
  EarlyStopping(int min_epochs, int patience);

  /// Records the next round's score; true when training should stop now.
  bool update(double score);

  int rounds() const { return rounds_; }
  int best_round() const { return best_round_; }
  double best_score() const { return best_score_; }
  bool last_improved() const { return last_improved_; }
  bool stopped() const { return stopped_; }

 private:
  int min_epochs_;
  int patience_;
  int rounds_ = 0;
  int stale_ = 0;
  int best_round_ = 0;
  double best_score_ = 0.0;
  bool last_improved_ = false;
  bool stopped_ = false;
};

// Client data ----------------------------------------------------------------------

/// What one client may train on. Fields absent for a mode are empty, so a
/// client without labels has no way to reach them.
struct ClientData {
  std::string client_id;
  synthdata::Role role = synthdata::Role::unlabeled;
  std::optional<synthdata::LabeledTrainingSet> labeled;
  std::optional<synthdata::UnlabeledTrainingSet> unlabeled;
};

struct TrainingData {
  std::vector<ClientData> clients;  // the labeled client, when present, comes first
  synthdata::LabeledTrainingSet validation;  // labeled client's validation split
};

/// Views of the scenario's training splits exposed to `mode`:
///   fedcy, fedcy_no_cont: labels at the labeled client, frames elsewhere
///   fedtcc:               frames everywhere, labels at the labeled client
///   fullsup_labeled_only: the labeled client alone
///   fedavg_fullsup:       labels everywhere
TrainingData make_training_data(const synthdata::Scenario& scenario, Mode mode);

// Local training -------------------------------------------------------------------

struct LocalResult {
  double mean_loss = 0.0;
  std::vector<double> batch_losses;  // objective before each update
};

/// Batches of |B| clips (indices into the video list plus frame ids) for
/// one epoch: every video is cut into epoch clips, the pooled list is
/// shuffled and split, and a short remainder is dropped.
struct ClipRef {
  std::size_t video = 0;
  sampling::Clip clip;
};
std::vector<std::vector<ClipRef>> plan_clip_batches(const synthdata::UnlabeledTrainingSet& data,
                                                    const FederationConfig& cfg, Rng& rng);

/// Shuffled frame indices in batches of `batch_size`; the last batch may be
/// short.
std::vector<std::vector<std::size_t>> plan_frame_batches(std::size_t frame_count, std::size_t batch_size,
                                                         Rng& rng);

/// Frames of one clip (1-based ids) as a k x input_dim matrix.
Array clip_frames(const synthdata::UnlabeledTrainingSet& data, const ClipRef& ref);

/// One pass of TCC training; updates omega only.
LocalResult local_unsupervised_epoch(ParameterSet& params, AdamState& opt, const synthdata::UnlabeledTrainingSet& data,
                                     const FederationConfig& cfg, Rng& rng);

/// One pass minimizing mean cross-entropy + lambda_c * supervised
/// contrastive loss; updates omega and theta.
LocalResult local_supervised_epoch(ParameterSet& params, AdamState& opt, const synthdata::LabeledTrainingSet& data,
                                   const FederationConfig& cfg, const losses::ContrastiveConfig& contrastive,
                                   Rng& rng);

// Aggregation ----------------------------------------------------------------------

/// omega_G = sum_j p_j omega_j. theta_G is copied from local[labeled_index],
/// or averaged with the same weights when `average_theta` is set. Takes bare
/// parameter sets, so optimizer state cannot enter the payload.
ParameterSet aggregate(std::span<const ParameterSet> local, std::span<const double> weights,
                       std::size_t labeled_index, bool average_theta = false);

// Rounds ---------------------------------------------------------------------------

enum class Stage { pretrain, train };

std::string to_string(Stage s);

struct ClientLoss {
  std::string client_id;
  double mean_loss = 0.0;
};

struct RoundReport {
  int round = 0;  // 1-based over the whole run
  Stage stage = Stage::train;
  std::vector<ClientLoss> client_losses;
  double validation_f1 = 0.0;
  bool early_stop = false;
  double seconds = 0.0;
};

nlohmann::json to_json(const RoundReport& r);

/// Everything handed to the aggregation observer for one round.
struct AggregationEvent {
  int round = 0;
  Stage stage = Stage::train;
  std::vector<ParameterSet> local;
  std::vector<double> weights;
  std::size_t labeled_index = 0;
  bool average_theta = false;
  const ParameterSet* result = nullptr;
};

struct ClientState {
  ClientData data;
  ParameterSet params;
  AdamState optimizer;
  double weight = 0.0;  // p for the current stage
};

struct Federation {
  FederationConfig cfg;
  model::ModelConfig model;
  TrainingData data;
  ParameterSet global;
  std::vector<ClientState> clients;
  Stage stage = Stage::train;
  int round = 0;        // rounds executed so far
  int stage_round = 0;  // rounds executed in the current stage
  EarlyStopping stopper{6, 3};
  std::function<void(const AggregationEvent&)> on_aggregate;
};

/// Global params from the init stream of the master seed.
Federation init_federation(const FederationConfig& cfg, const model::ModelConfig& model, TrainingData data,
                           Stage initial = Stage::train);

/// Switches to the given stage: recomputes participants and weights and
/// clears optimizer state.
void enter_stage(Federation& fed, Stage stage);

/// Broadcast, one local epoch per participating client, aggregation, and
/// validation on the labeled client's validation split.
RoundReport run_round(Federation& fed);

struct TrainingResult {
  ParameterSet best;
  int best_round = 0;
  double best_validation_f1 = 0.0;
  std::vector<RoundReport> reports;
  ParameterSet final_params;
};

using RoundCallback = std::function<void(const RoundReport&, const ParameterSet& global)>;

TrainingResult run_training(const FederationConfig& cfg, const model::ModelConfig& model, TrainingData data,
                            const RoundCallback& on_round = {},
                            const std::function<void(const AggregationEvent&)>& on_aggregate = {});

}  // namespace fedcy::federation
