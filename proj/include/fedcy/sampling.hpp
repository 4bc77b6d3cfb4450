#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

namespace fedcy::sampling {

using Rng = std::mt19937_64;

/// Strictly increasing 1-based frame ids.
struct Clip {
  std::vector<std::size_t> frame_ids;

  std::size_t size() const noexcept { return frame_ids.size(); }
  friend bool operator==(const Clip&, const Clip&) = default;
};

enum class Strategy { partition, uniform_strided, random_offset };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

/// How the partition strategy keeps an epoch's clips disjoint.
///   blocks:      cut the video into floor(L/k) contiguous blocks and
///                partition-sample each block, one clip per block
///   interleaved: cut the video into k partitions and deal floor(L/k)
///                distinct frames of each partition out to the clips, so
///                every clip spans the whole video
enum class EpochLayout { blocks, interleaved };

std::string to_string(EpochLayout l);
EpochLayout layout_from_string(const std::string& s);

struct SamplerConfig {
  Strategy strategy = Strategy::partition;
  std::size_t clip_size = 16;
  std::size_t stride = 4;  // uniform_strided only
  EpochLayout layout = EpochLayout::interleaved;  // partition only

  void validate() const;
};

/// {o, o+s, ..., o+(k-1)s} with o uniform in [1, L-(k-1)s].
Clip sample_uniform_strided(std::size_t length, std::size_t k, std::size_t stride, Rng& rng);

/// k distinct ids in [offset, L], uniform over such subsets, ascending.
Clip sample_random_offset(std::size_t length, std::size_t k, std::size_t offset, Rng& rng);

/// Bounds (lo, hi] of partition i (1-based) when [1, L] is cut into k parts:
/// lo = ceil((i-1)L/k), hi = ceil(iL/k).
std::pair<std::size_t, std::size_t> partition_bounds(std::size_t length, std::size_t k, std::size_t i);

/// One uniform draw from each of the k partitions of [1, L].
Clip sample_partitioned(std::size_t length, std::size_t k, Rng& rng);

/// floor(L/k) clips for one epoch. Partition clips are pairwise disjoint
/// under either layout. The baseline strategies draw their offsets
/// independently per clip and may overlap.
std::vector<Clip> sample_epoch_clips(std::size_t length, const SamplerConfig& cfg, Rng& rng);

}  // namespace fedcy::sampling
