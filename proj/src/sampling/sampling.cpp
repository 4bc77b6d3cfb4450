#include "fedcy/sampling.hpp"

#include <algorithm>
#include <iterator>
#include <numeric>
#include <stdexcept>

namespace fedcy::sampling {

namespace {

std::size_t ceil_div(std::size_t num, std::size_t den) { return (num + den - 1) / den; }

std::size_t uniform_between(std::size_t lo, std::size_t hi, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::partition: return "partition";
    case Strategy::uniform_strided: return "uniform_strided";
    case Strategy::random_offset: return "random_offset";
  }
  return "partition";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "partition") return Strategy::partition;
  if (s == "uniform_strided") return Strategy::uniform_strided;
  if (s == "random_offset") return Strategy::random_offset;
  throw std::invalid_argument("unknown sampling strategy '" + s + "'");
}

std::string to_string(EpochLayout l) { return l == EpochLayout::blocks ? "blocks" : "interleaved"; }

EpochLayout layout_from_string(const std::string& s) {
  if (s == "blocks") return EpochLayout::blocks;
  if (s == "interleaved") return EpochLayout::interleaved;
  throw std::invalid_argument("unknown epoch layout '" + s + "'");
}

void SamplerConfig::validate() const {
  if (clip_size == 0) throw std::invalid_argument("sampler.clip_size must be positive");
  if (stride == 0) throw std::invalid_argument("sampler.stride must be positive");
}

Clip sample_uniform_strided(std::size_t length, std::size_t k, std::size_t stride, Rng& rng) {
  if (k == 0 || stride == 0) throw std::invalid_argument("clip size and stride must be positive");
  const std::size_t span = (k - 1) * stride;
  if (span >= length) throw std::invalid_argument("video too short for the requested clip size and stride");
  const std::size_t offset = uniform_between(1, length - span, rng);
  Clip clip;
  clip.frame_ids.reserve(k);
  for (std::size_t j = 0; j < k; ++j) clip.frame_ids.push_back(offset + j * stride);
  return clip;
}

Clip sample_random_offset(std::size_t length, std::size_t k, std::size_t offset, Rng& rng) {
  if (k == 0 || offset == 0) throw std::invalid_argument("clip size and offset must be positive");
  if (offset > length || length - offset + 1 < k) {
    throw std::invalid_argument("insufficient frames after the offset");
  }
  std::vector<std::size_t> eligible(length - offset + 1);
  std::iota(eligible.begin(), eligible.end(), offset);
  Clip clip;
  clip.frame_ids.reserve(k);
  // Selection sampling keeps the input order, so the result is ascending.
  std::sample(eligible.begin(), eligible.end(), std::back_inserter(clip.frame_ids), k, rng);
  return clip;
}

std::pair<std::size_t, std::size_t> partition_bounds(std::size_t length, std::size_t k, std::size_t i) {
  return {ceil_div((i - 1) * length, k), ceil_div(i * length, k)};
}

Clip sample_partitioned(std::size_t length, std::size_t k, Rng& rng) {
  if (k == 0) throw std::invalid_argument("clip size must be positive");
  if (length < k) throw std::invalid_argument("video shorter than the clip size");
  Clip clip;
  clip.frame_ids.reserve(k);
  for (std::size_t i = 1; i <= k; ++i) {
    const auto [lo, hi] = partition_bounds(length, k, i);
    clip.frame_ids.push_back(uniform_between(lo + 1, hi, rng));
  }
  return clip;
}

std::vector<Clip> sample_epoch_clips(std::size_t length, const SamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t k = cfg.clip_size;
  if (length < k) throw std::invalid_argument("video shorter than the clip size");
  const std::size_t count = length / k;
  std::vector<Clip> clips;
  clips.reserve(count);
  if (cfg.strategy == Strategy::partition && cfg.layout == EpochLayout::interleaved) {
    clips.resize(count);
    std::vector<std::size_t> ids;
    for (std::size_t i = 1; i <= k; ++i) {
      const auto [lo, hi] = partition_bounds(length, k, i);
      // Every partition holds at least floor(L/k) frames.
      ids.clear();
      for (std::size_t id = lo + 1; id <= hi; ++id) ids.push_back(id);
      std::vector<std::size_t> picked;
      std::sample(ids.begin(), ids.end(), std::back_inserter(picked), count, rng);
      std::shuffle(picked.begin(), picked.end(), rng);
      for (std::size_t c = 0; c < count; ++c) clips[c].frame_ids.push_back(picked[c]);
    }
    return clips;
  }
  for (std::size_t c = 1; c <= count; ++c) {
    switch (cfg.strategy) {
      case Strategy::partition: {
        const auto [lo, hi] = partition_bounds(length, count, c);
        Clip clip = sample_partitioned(hi - lo, k, rng);
        for (auto& id : clip.frame_ids) id += lo;
        clips.push_back(std::move(clip));
        break;
      }
      case Strategy::uniform_strided:
        clips.push_back(sample_uniform_strided(length, k, cfg.stride, rng));
        break;
      case Strategy::random_offset: {
        const std::size_t offset = uniform_between(1, length - k + 1, rng);
        clips.push_back(sample_random_offset(length, k, offset, rng));
        break;
      }
    }
  }
  return clips;
}

}  // namespace fedcy::sampling
