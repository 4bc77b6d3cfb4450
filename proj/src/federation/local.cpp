#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "fedcy/federation.hpp"

namespace fedcy::federation {

using engine::Expr;

std::vector<std::vector<ClipRef>> plan_clip_batches(const synthdata::UnlabeledTrainingSet& data,
                                                    const FederationConfig& cfg, Rng& rng) {
  std::vector<ClipRef> pool;
  for (std::size_t v = 0; v < data.videos.size(); ++v) {
    const std::size_t length = data.videos[v].rows();
    if (length < cfg.sampler.clip_size) continue;
    for (auto& clip : sampling::sample_epoch_clips(length, cfg.sampler, rng)) pool.push_back({v, std::move(clip)});
  }
  if (pool.size() < cfg.clip_batch_size) {
    throw std::runtime_error("client '" + data.client_id + "' yields " + std::to_string(pool.size()) +
                             " clips, fewer than the clip batch size " + std::to_string(cfg.clip_batch_size));
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<std::vector<ClipRef>> batches;
  for (std::size_t start = 0; start + cfg.clip_batch_size <= pool.size(); start += cfg.clip_batch_size) {
    batches.emplace_back(pool.begin() + static_cast<std::ptrdiff_t>(start),
                         pool.begin() + static_cast<std::ptrdiff_t>(start + cfg.clip_batch_size));
  }
  return batches;
}

std::vector<std::vector<std::size_t>> plan_frame_batches(std::size_t frame_count, std::size_t batch_size,
                                                         Rng& rng) {
  if (frame_count == 0) throw std::runtime_error("supervised epoch on an empty dataset");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  std::vector<std::size_t> order(frame_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < frame_count; start += batch_size) {
    const std::size_t end = std::min(frame_count, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

Array clip_frames(const synthdata::UnlabeledTrainingSet& data, const ClipRef& ref) {
  std::vector<std::size_t> rows;
  rows.reserve(ref.clip.size());
  for (std::size_t id : ref.clip.frame_ids) rows.push_back(id - 1);
  return engine::take_rows(data.videos.at(ref.video), rows);
}

LocalResult local_unsupervised_epoch(ParameterSet& params, AdamState& opt, const synthdata::UnlabeledTrainingSet& data,
                                     const FederationConfig& cfg, Rng& rng) {
  const auto batches = plan_clip_batches(data, cfg, rng);
  const auto wrt = model::omega_names(params.config);
  const AdamConfig adam = adam_config(cfg);
  LocalResult out;
  for (const auto& batch : batches) {
    std::vector<losses::Sequence> clips;
    for (const auto& ref : batch) {
      clips.push_back({model::feature_expr(params.config, Expr::literal(clip_frames(data, ref))), ref.clip.size()});
    }
    const Expr objective = losses::tcc_batch_objective(clips, cfg.tcc);
    auto vg = engine::value_and_gradient(objective, model::bindings(params), wrt);
    out.batch_losses.push_back(vg.value);
    adam_step(params, vg.gradients, opt, adam, false);
  }
  out.mean_loss = std::accumulate(out.batch_losses.begin(), out.batch_losses.end(), 0.0) /
                  static_cast<double>(out.batch_losses.size());
  return out;
}

LocalResult local_supervised_epoch(ParameterSet& params, AdamState& opt, const synthdata::LabeledTrainingSet& data,
                                   const FederationConfig& cfg, const losses::ContrastiveConfig& contrastive,
                                   Rng& rng) {
  const auto batches = plan_frame_batches(data.labels.size(), cfg.labeled_batch_size, rng);
  auto wrt = model::omega_names(params.config);
  for (auto& n : model::theta_names()) wrt.push_back(n);
  const AdamConfig adam = adam_config(cfg);
  LocalResult out;
  for (const auto& batch : batches) {
    const Array frames = engine::take_rows(data.frames, batch);
    std::vector<int> labels;
    labels.reserve(batch.size());
    for (std::size_t i : batch) labels.push_back(data.labels[i]);
    const Expr objective = losses::labeled_objective(params.config, frames, labels, contrastive);
    auto vg = engine::value_and_gradient(objective, model::bindings(params), wrt);
    out.batch_losses.push_back(vg.value);
    adam_step(params, vg.gradients, opt, adam, true);
  }
  out.mean_loss = std::accumulate(out.batch_losses.begin(), out.batch_losses.end(), 0.0) /
                  static_cast<double>(out.batch_losses.size());
  return out;
}

}  // namespace fedcy::federation
