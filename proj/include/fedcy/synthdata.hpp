#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedcy/engine/array.hpp"

namespace fedcy::synthdata {

using engine::Array;
using Rng = std::mt19937_64;

/// Phase-ordering and duration model shared by every client.
///
/// Phases 1..Q always run once each, consecutively and in order. Phases
/// Q+1..P follow in any order, each as one contiguous run, except that the
/// repeatable phase (when nonzero) may occur as two separate runs.
struct WorkflowModel {
  int num_phases = 6;
  int sequential_prefix = 4;
  int repeatable_phase = 6;  // 0 disables repetition
  double repeat_probability = 0.2;
  std::vector<double> mean_durations{8.0, 30.0, 10.0, 28.0, 8.0, 12.0};  // frames, reference client
  double duration_log_sigma = 0.3;

  void validate() const;
};

/// True iff `labels` follows the workflow ordering rule. Throws on an empty
/// sequence or a phase id outside [1, P].
bool validate_workflow(std::span<const int> labels, const WorkflowModel& workflow);

enum class Role { labeled, unlabeled, held_out };
enum class Split { train, validation, test };

std::string to_string(Role r);
std::string to_string(Split s);
Role role_from_string(const std::string& s);
Split split_from_string(const std::string& s);

struct ClientProfile {
  std::string client_id;
  Role role = Role::unlabeled;
  Array centroids;         // P x input_dim, client shift already applied
  Array shift;             // input_dim, common offset relative to the reference
  Array shift_basis;       // r x input_dim orthonormal rows; client offsets lie in their span
  Array drift_directions;  // P x input_dim, unit rows
  double duration_scale = 1.0;
  double noise_sigma = 0.1;
  double drift = 0.0;

  /// Expected length in frames of one run of `phase` (1-based).
  double expected_duration(const WorkflowModel& workflow, int phase) const;
};

struct SyntheticVideo {
  std::string id;
  Split split = Split::train;
  Array frames;             // L x input_dim
  std::vector<int> labels;  // L phase ids; evaluation only for unlabeled clients
};

/// Draws a phase order obeying the workflow, log-normal run durations scaled
/// by the profile, and frames = centroid + drift * (position in run - 1/2) *
/// drift direction + Gaussian noise.
SyntheticVideo generate_video(const ClientProfile& profile, const WorkflowModel& workflow, Rng& rng);

struct SplitCounts {
  int train = 0;
  int validation = 0;
  int test = 0;

  int total() const { return train + validation + test; }
};

struct ScenarioConfig {
  WorkflowModel workflow;
  std::size_t input_dim = 32;
  double centroid_spacing = 1.0;
  double noise_sigma = 0.3;
  double drift = 0.3;

  /// Heterogeneity knob h. Client centroids move by h * shift_scale along a
  /// client direction inside the shift subspace, plus h * phase_shift_scale
  /// along a free direction per phase. Duration scales are
  /// exp(h * duration_shift_sigma * z). h = 0 reproduces the reference.
  double heterogeneity = 0.5;
  double shift_scale = 4.0;
  double phase_shift_scale = 1.0;
  double duration_shift_sigma = 0.3;

  /// Dimension r of the subspace holding the common client offsets, shared
  /// by all clients of a scenario. 0 means the whole input space.
  std::size_t shift_rank = 3;

  int num_unlabeled = 4;
  SplitCounts labeled_videos{12, 3, 6};
  SplitCounts unlabeled_videos{6, 3, 3};
  SplitCounts held_out_videos{0, 0, 6};

  /// Optional explicit duration scales for the unlabeled clients, in order.
  std::vector<double> unlabeled_duration_scales;

  void validate() const;
};

struct ClientDataset {
  ClientProfile profile;
  std::uint64_t generation_seed = 0;
  std::vector<SyntheticVideo> videos;

  const std::string& id() const { return profile.client_id; }
  Role role() const { return profile.role; }
  std::size_t frame_count(Split split) const;
};

struct Scenario {
  ScenarioConfig config;
  std::uint64_t master_seed = 0;
  ClientProfile reference;
  ClientDataset labeled;
  std::vector<ClientDataset> unlabeled;
  ClientDataset held_out;
};

ClientProfile reference_profile(const ScenarioConfig& config, std::uint64_t master_seed);
ClientProfile client_profile(const ScenarioConfig& config, const ClientProfile& reference, std::string client_id,
                             Role role, std::uint64_t client_seed, int unlabeled_index);

Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t master_seed);

// Training and evaluation views ---------------------------------------------
//
// Training code receives only these views. The unlabeled view carries frames
// and nothing else, so ground truth cannot leak into unsupervised training.

struct LabeledTrainingSet {
  std::string client_id;
  Array frames;  // N x input_dim, videos concatenated
  std::vector<int> labels;
};

struct UnlabeledTrainingSet {
  std::string client_id;
  std::vector<Array> videos;  // each L x input_dim

  std::size_t frame_count() const;
};

struct EvaluationSet {
  std::string client_id;
  Role role = Role::unlabeled;
  Array frames;
  std::vector<int> labels;
};

LabeledTrainingSet labeled_view(const ClientDataset& client, Split split);
UnlabeledTrainingSet unlabeled_view(const ClientDataset& client, Split split);
EvaluationSet evaluation_view(const ClientDataset& client, Split split);

// Files ------------------------------------------------------------------------

inline constexpr int kDatasetFormatVersion = 1;

nlohmann::json to_json(const WorkflowModel& w);
WorkflowModel workflow_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& c);
nlohmann::json client_to_json(const ClientDataset& client);
ClientDataset client_from_json(const nlohmann::json& j);

}  // namespace fedcy::synthdata
