#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedcy/rng.hpp"
#include "fedcy/synthdata.hpp"

namespace fedcy::synthdata {

using engine::Shape;

namespace {

std::vector<double> gaussian_vector(std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

double norm(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

std::vector<double> unit_vector(std::size_t n, Rng& rng) {
  auto v = gaussian_vector(n, rng);
  const double len = norm(v);
  for (double& x : v) x /= len;
  return v;
}

// Rows: `count` orthonormal vectors of length n (Gram-Schmidt on Gaussians).
Array orthonormal_rows(std::size_t count, std::size_t n, Rng& rng) {
  Array out(Shape{count, n});
  for (std::size_t r = 0; r < count; ++r) {
    std::vector<double> v;
    double len = 0.0;
    do {
      v = gaussian_vector(n, rng);
      for (std::size_t q = 0; q < r; ++q) {
        double proj = 0.0;
        for (std::size_t c = 0; c < n; ++c) proj += v[c] * out.at(q, c);
        for (std::size_t c = 0; c < n; ++c) v[c] -= proj * out.at(q, c);
      }
      len = norm(v);
    } while (len < 1e-8);
    for (std::size_t c = 0; c < n; ++c) out.at(r, c) = v[c] / len;
  }
  return out;
}

// Phase runs in temporal order.
std::vector<int> draw_phase_order(const WorkflowModel& w, Rng& rng) {
  std::vector<int> order(static_cast<std::size_t>(w.sequential_prefix));
  std::iota(order.begin(), order.end(), 1);
  std::vector<int> tail(static_cast<std::size_t>(w.num_phases - w.sequential_prefix));
  std::iota(tail.begin(), tail.end(), w.sequential_prefix + 1);
  std::shuffle(tail.begin(), tail.end(), rng);

  if (w.repeatable_phase != 0 && std::bernoulli_distribution(w.repeat_probability)(rng)) {
    const int r = w.repeatable_phase;
    std::vector<std::size_t> slots;  // insertion points not adjacent to an existing run of r
    for (std::size_t pos = 0; pos <= tail.size(); ++pos) {
      const bool left_ok = pos == 0 || tail[pos - 1] != r;
      const bool right_ok = pos == tail.size() || tail[pos] != r;
      if (left_ok && right_ok) slots.push_back(pos);
    }
    if (!slots.empty()) {
      const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, slots.size() - 1)(rng);
      tail.insert(tail.begin() + static_cast<std::ptrdiff_t>(slots[pick]), r);
    }
  }
  order.insert(order.end(), tail.begin(), tail.end());
  return order;
}

}  // namespace

double ClientProfile::expected_duration(const WorkflowModel& workflow, int phase) const {
  return workflow.mean_durations.at(static_cast<std::size_t>(phase - 1)) * duration_scale;
}

SyntheticVideo generate_video(const ClientProfile& profile, const WorkflowModel& workflow, Rng& rng) {
  workflow.validate();
  const std::size_t dim = profile.centroids.cols();
  if (profile.centroids.rows() != static_cast<std::size_t>(workflow.num_phases)) {
    throw std::invalid_argument("profile centroid count does not match the workflow phase count");
  }
  const std::vector<int> order = draw_phase_order(workflow, rng);

  std::vector<std::size_t> durations;
  durations.reserve(order.size());
  for (int phase : order) {
    const double mean = profile.expected_duration(workflow, phase);
    const double sigma = workflow.duration_log_sigma;
    // Log-normal with the requested mean.
    std::lognormal_distribution<double> dist(std::log(mean) - 0.5 * sigma * sigma, sigma);
    durations.push_back(static_cast<std::size_t>(std::max(1L, std::lround(dist(rng)))));
  }

  const std::size_t length = std::accumulate(durations.begin(), durations.end(), std::size_t{0});
  SyntheticVideo video;
  video.frames = Array(Shape{length, dim});
  video.labels.reserve(length);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::size_t t = 0;
  for (std::size_t run = 0; run < order.size(); ++run) {
    const auto p = static_cast<std::size_t>(order[run] - 1);
    const double d = static_cast<double>(durations[run]);
    for (std::size_t i = 0; i < durations[run]; ++i, ++t) {
      const double progress = (static_cast<double>(i) + 0.5) / d - 0.5;
      for (std::size_t c = 0; c < dim; ++c) {
        double x = profile.centroids.at(p, c);
        if (profile.drift != 0.0) x += profile.drift * progress * profile.drift_directions.at(p, c);
        if (profile.noise_sigma != 0.0) x += profile.noise_sigma * noise(rng);
        video.frames.at(t, c) = x;
      }
      video.labels.push_back(order[run]);
    }
  }
  return video;
}

void ScenarioConfig::validate() const {
  workflow.validate();
  if (input_dim < static_cast<std::size_t>(workflow.num_phases)) {
    throw std::invalid_argument("scenario.input_dim must be at least the number of phases");
  }
  if (!(centroid_spacing > 0.0)) throw std::invalid_argument("scenario.centroid_spacing must be positive");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("scenario.noise_sigma must be nonnegative");
  if (!(drift >= 0.0)) throw std::invalid_argument("scenario.drift must be nonnegative");
  if (!(heterogeneity >= 0.0)) throw std::invalid_argument("scenario.heterogeneity must be nonnegative");
  if (!(shift_scale >= 0.0 && phase_shift_scale >= 0.0 && duration_shift_sigma >= 0.0)) {
    throw std::invalid_argument("scenario shift scales must be nonnegative");
  }
  if (shift_rank > input_dim) throw std::invalid_argument("scenario.shift_rank must not exceed input_dim");
  if (num_unlabeled < 1) throw std::invalid_argument("scenario.num_unlabeled must be at least 1");
  auto check = [](const SplitCounts& s, const char* who, bool trains, bool validates) {
    if (s.train < 0 || s.validation < 0 || s.test < 0) {
      throw std::invalid_argument(std::string("invalid split: negative video count for ") + who);
    }
    if (trains && s.train < 1) throw std::invalid_argument(std::string("invalid split: ") + who + " needs train videos");
    if (validates && s.validation < 1) {
      throw std::invalid_argument(std::string("invalid split: ") + who + " needs validation videos");
    }
    if (s.test < 1) throw std::invalid_argument(std::string("invalid split: ") + who + " needs test videos");
  };
  check(labeled_videos, "labeled client", true, true);
  check(unlabeled_videos, "unlabeled clients", true, false);
  check(held_out_videos, "held-out client", false, false);
  if (!unlabeled_duration_scales.empty()) {
    if (unlabeled_duration_scales.size() != static_cast<std::size_t>(num_unlabeled)) {
      throw std::invalid_argument("scenario.unlabeled_duration_scales needs one entry per unlabeled client");
    }
    for (double s : unlabeled_duration_scales) {
      if (!(s > 0.0)) throw std::invalid_argument("scenario.unlabeled_duration_scales entries must be positive");
    }
  }
}

ClientProfile reference_profile(const ScenarioConfig& config, std::uint64_t master_seed) {
  Rng rng = derive_rng(master_seed, {stream::kScenario, stream::kProfile});
  const auto phases = static_cast<std::size_t>(config.workflow.num_phases);
  ClientProfile ref;
  ref.client_id = "reference";
  ref.role = Role::labeled;
  // Orthonormal rows scaled by spacing / sqrt(2) sit at pairwise distance `spacing`.
  ref.centroids = orthonormal_rows(phases, config.input_dim, rng);
  for (double& v : ref.centroids.data()) v *= config.centroid_spacing / std::sqrt(2.0);
  ref.shift = Array(Shape{config.input_dim}, 0.0);
  ref.drift_directions = Array(Shape{phases, config.input_dim});
  for (std::size_t p = 0; p < phases; ++p) {
    const auto u = unit_vector(config.input_dim, rng);
    std::copy(u.begin(), u.end(), ref.drift_directions.data().begin() + static_cast<std::ptrdiff_t>(p * config.input_dim));
  }
  const std::size_t rank = config.shift_rank == 0 ? config.input_dim : config.shift_rank;
  ref.shift_basis = orthonormal_rows(rank, config.input_dim, rng);
  ref.duration_scale = 1.0;
  ref.noise_sigma = config.noise_sigma;
  ref.drift = config.drift;
  return ref;
}

ClientProfile client_profile(const ScenarioConfig& config, const ClientProfile& reference, std::string client_id,
                             Role role, std::uint64_t client_seed, int unlabeled_index) {
  ClientProfile p = reference;
  p.client_id = std::move(client_id);
  p.role = role;
  if (role == Role::labeled) return p;

  Rng rng = derive_rng(client_seed, {stream::kProfile});
  const double h = config.heterogeneity;
  const std::size_t dim = config.input_dim;
  const auto coeffs = unit_vector(p.shift_basis.rows(), rng);
  for (std::size_t c = 0; c < dim; ++c) {
    double d = 0.0;
    for (std::size_t r = 0; r < coeffs.size(); ++r) d += coeffs[r] * p.shift_basis.at(r, c);
    p.shift[c] = h * config.shift_scale * d;
  }
  for (std::size_t ph = 0; ph < p.centroids.rows(); ++ph) {
    const auto wobble = unit_vector(dim, rng);
    for (std::size_t c = 0; c < dim; ++c) {
      p.centroids.at(ph, c) += p.shift[c] + h * config.phase_shift_scale * wobble[c];
    }
  }
  const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
  p.duration_scale = std::exp(h * config.duration_shift_sigma * z);
  if (role == Role::unlabeled && !config.unlabeled_duration_scales.empty()) {
    p.duration_scale = config.unlabeled_duration_scales.at(static_cast<std::size_t>(unlabeled_index));
  }
  return p;
}

namespace {

ClientDataset make_client(const ScenarioConfig& config, const ClientProfile& reference, std::string id, Role role,
                          std::uint64_t seed, int unlabeled_index, const SplitCounts& counts) {
  ClientDataset client;
  client.profile = client_profile(config, reference, std::move(id), role, seed, unlabeled_index);
  client.generation_seed = seed;
  const Split order[] = {Split::train, Split::validation, Split::test};
  const int sizes[] = {counts.train, counts.validation, counts.test};
  std::uint64_t index = 0;
  for (int s = 0; s < 3; ++s) {
    for (int v = 0; v < sizes[s]; ++v, ++index) {
      Rng rng = derive_rng(seed, {stream::kVideo, index});
      SyntheticVideo video = generate_video(client.profile, config.workflow, rng);
      video.id = client.id() + "/v" + std::to_string(index);
      video.split = order[s];
      client.videos.push_back(std::move(video));
    }
  }
  return client;
}

}  // namespace

Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t master_seed) {
  config.validate();
  Scenario sc;
  sc.config = config;
  sc.master_seed = master_seed;
  sc.reference = reference_profile(config, master_seed);
  const auto seed_of = [&](std::uint64_t index) { return derive_seed(master_seed, {stream::kClient, index}); };
  sc.labeled = make_client(config, sc.reference, "labeled", Role::labeled, seed_of(0), -1, config.labeled_videos);
  for (int j = 0; j < config.num_unlabeled; ++j) {
    sc.unlabeled.push_back(make_client(config, sc.reference, "unlabeled_" + std::to_string(j + 1), Role::unlabeled,
                                       seed_of(static_cast<std::uint64_t>(j) + 1), j, config.unlabeled_videos));
  }
  sc.held_out = make_client(config, sc.reference, "held_out", Role::held_out,
                            seed_of(static_cast<std::uint64_t>(config.num_unlabeled) + 1), -1,
                            config.held_out_videos);
  return sc;
}

std::size_t ClientDataset::frame_count(Split split) const {
  std::size_t n = 0;
  for (const auto& v : videos) {
    if (v.split == split) n += v.labels.size();
  }
  return n;
}

std::size_t UnlabeledTrainingSet::frame_count() const {
  std::size_t n = 0;
  for (const auto& v : videos) n += v.rows();
  return n;
}

namespace {

std::pair<Array, std::vector<int>> concatenate(const ClientDataset& client, Split split) {
  const std::size_t dim = client.profile.centroids.cols();
  std::vector<double> data;
  std::vector<int> labels;
  for (const auto& v : client.videos) {
    if (v.split != split) continue;
    data.insert(data.end(), v.frames.data().begin(), v.frames.data().end());
    labels.insert(labels.end(), v.labels.begin(), v.labels.end());
  }
  const std::size_t rows = labels.size();
  return {Array::matrix(rows, dim, std::move(data)), std::move(labels)};
}

}  // namespace

LabeledTrainingSet labeled_view(const ClientDataset& client, Split split) {
  auto [frames, labels] = concatenate(client, split);
  return LabeledTrainingSet{client.id(), std::move(frames), std::move(labels)};
}

UnlabeledTrainingSet unlabeled_view(const ClientDataset& client, Split split) {
  UnlabeledTrainingSet out{client.id(), {}};
  for (const auto& v : client.videos) {
    if (v.split == split) out.videos.push_back(v.frames);
  }
  return out;
}

EvaluationSet evaluation_view(const ClientDataset& client, Split split) {
  auto [frames, labels] = concatenate(client, split);
  if (labels.empty()) {
    throw std::invalid_argument("client '" + client.id() + "' has no " + to_string(split) + " split");
  }
  return EvaluationSet{client.id(), client.role(), std::move(frames), std::move(labels)};
}

}  // namespace fedcy::synthdata
