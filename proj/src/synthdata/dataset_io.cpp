#include <stdexcept>

#include "fedcy/model.hpp"
#include "fedcy/synthdata.hpp"

namespace fedcy::synthdata {

using nlohmann::json;
using model::array_from_json;
using model::array_to_json;

json to_json(const WorkflowModel& w) {
  return json{{"num_phases", w.num_phases},
              {"sequential_prefix", w.sequential_prefix},
              {"repeatable_phase", w.repeatable_phase},
              {"repeat_probability", w.repeat_probability},
              {"mean_durations", w.mean_durations},
              {"duration_log_sigma", w.duration_log_sigma}};
}

WorkflowModel workflow_from_json(const json& j) {
  WorkflowModel w;
  w.num_phases = j.at("num_phases").get<int>();
  w.sequential_prefix = j.at("sequential_prefix").get<int>();
  w.repeatable_phase = j.at("repeatable_phase").get<int>();
  w.repeat_probability = j.at("repeat_probability").get<double>();
  w.mean_durations = j.at("mean_durations").get<std::vector<double>>();
  w.duration_log_sigma = j.at("duration_log_sigma").get<double>();
  w.validate();
  return w;
}

namespace {

json counts_to_json(const SplitCounts& s) {
  return json{{"train", s.train}, {"validation", s.validation}, {"test", s.test}};
}

}  // namespace

json to_json(const ScenarioConfig& c) {
  return json{{"workflow", to_json(c.workflow)},
              {"input_dim", c.input_dim},
              {"centroid_spacing", c.centroid_spacing},
              {"noise_sigma", c.noise_sigma},
              {"drift", c.drift},
              {"heterogeneity", c.heterogeneity},
              {"shift_scale", c.shift_scale},
              {"phase_shift_scale", c.phase_shift_scale},
              {"duration_shift_sigma", c.duration_shift_sigma},
              {"shift_rank", c.shift_rank},
              {"num_unlabeled", c.num_unlabeled},
              {"labeled_videos", counts_to_json(c.labeled_videos)},
              {"unlabeled_videos", counts_to_json(c.unlabeled_videos)},
              {"held_out_videos", counts_to_json(c.held_out_videos)},
              {"unlabeled_duration_scales", c.unlabeled_duration_scales}};
}

json client_to_json(const ClientDataset& client) {
  const ClientProfile& p = client.profile;
  json videos = json::array();
  for (const auto& v : client.videos) {
    videos.push_back(json{{"id", v.id}, {"split", to_string(v.split)}, {"frames", array_to_json(v.frames)},
                          {"labels", v.labels}});
  }
  return json{{"format_version", kDatasetFormatVersion},
              {"kind", "fedcy.client_dataset"},
              {"client_id", p.client_id},
              {"role", to_string(p.role)},
              {"generation_seed", client.generation_seed},
              {"profile",
               {{"centroids", array_to_json(p.centroids)},
                {"shift", array_to_json(p.shift)},
                {"shift_basis", array_to_json(p.shift_basis)},
                {"drift_directions", array_to_json(p.drift_directions)},
                {"duration_scale", p.duration_scale},
                {"noise_sigma", p.noise_sigma},
                {"drift", p.drift}}},
              {"videos", std::move(videos)}};
}

ClientDataset client_from_json(const json& j) {
  if (j.value("kind", "") != "fedcy.client_dataset") throw std::runtime_error("not a client dataset document");
  if (j.at("format_version").get<int>() != kDatasetFormatVersion) {
    throw std::runtime_error("unsupported dataset format version");
  }
  ClientDataset c;
  ClientProfile& p = c.profile;
  p.client_id = j.at("client_id").get<std::string>();
  p.role = role_from_string(j.at("role").get<std::string>());
  c.generation_seed = j.at("generation_seed").get<std::uint64_t>();
  const json& prof = j.at("profile");
  p.centroids = array_from_json(prof.at("centroids"));
  p.shift = array_from_json(prof.at("shift"));
  p.shift_basis = array_from_json(prof.at("shift_basis"));
  p.drift_directions = array_from_json(prof.at("drift_directions"));
  p.duration_scale = prof.at("duration_scale").get<double>();
  p.noise_sigma = prof.at("noise_sigma").get<double>();
  p.drift = prof.at("drift").get<double>();
  for (const auto& v : j.at("videos")) {
    SyntheticVideo video;
    video.id = v.at("id").get<std::string>();
    video.split = split_from_string(v.at("split").get<std::string>());
    video.frames = array_from_json(v.at("frames"));
    video.labels = v.at("labels").get<std::vector<int>>();
    if (video.frames.rank() != 2 || video.frames.rows() != video.labels.size()) {
      throw std::runtime_error("video '" + video.id + "' has mismatched frames and labels");
    }
    c.videos.push_back(std::move(video));
  }
  return c;
}

}  // namespace fedcy::synthdata
