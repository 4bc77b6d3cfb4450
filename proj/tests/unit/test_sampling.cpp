#include "fedcy/sampling.hpp"

#include "doctest.h"
#include "sampler_checks.hpp"

#include <cmath>
#include <map>
#include <set>
#include <random>

using namespace fedcy::sampling;

namespace {

std::vector<std::size_t> iota_ids(std::size_t from, std::size_t to) {
  std::vector<std::size_t> v;
  for (std::size_t i = from; i <= to; ++i) v.push_back(i);
  return v;
}

}  // namespace

TEST_CASE("strategy and layout names round-trip") {
  for (auto s : {Strategy::partition, Strategy::uniform_strided, Strategy::random_offset})
    CHECK(strategy_from_string(to_string(s)) == s);
  for (auto l : {EpochLayout::blocks, EpochLayout::interleaved}) CHECK(layout_from_string(to_string(l)) == l);
  CHECK_THROWS(strategy_from_string("dense"));
  CHECK_THROWS(layout_from_string("zigzag"));
  CHECK(SamplerConfig{}.clip_size == 16);
}

TEST_CASE("uniform strided sampling") {
  Rng rng(1);
  SUBCASE("only legal offset") {
    const Clip c = sample_uniform_strided(3 * 4 + 1, 4, 4, rng);
    CHECK(c.frame_ids == std::vector<std::size_t>{1, 5, 9, 13});
  }
  SUBCASE("k = 1 covers every offset") {
    std::set<std::size_t> seen;
    for (int t = 0; t < 2000; ++t) {
      const Clip c = sample_uniform_strided(7, 1, 3, rng);
      REQUIRE(c.size() == 1);
      seen.insert(c.frame_ids[0]);
    }
    CHECK(seen == std::set<std::size_t>{1, 2, 3, 4, 5, 6, 7});
  }
  SUBCASE("spacing always equals the stride") {
    int bad = 0;
    for (int t = 0; t < 2000; ++t) {
      const std::size_t k = 1 + rng() % 8, s = 1 + rng() % 5, length = (k - 1) * s + 1 + rng() % 40;
      bad += checks::strided(sample_uniform_strided(length, k, s, rng), length, k, s);
    }
    CHECK(bad == 0);
  }
  CHECK_THROWS(sample_uniform_strided(12, 4, 4, rng));
}

TEST_CASE("random sampling with offset") {
  Rng rng(2);
  SUBCASE("forced clip") {
    CHECK(sample_random_offset(10, 4, 7, rng).frame_ids == iota_ids(7, 10));
  }
  SUBCASE("ids at or after the offset, increasing") {
    int bad = 0;
    for (int t = 0; t < 2000; ++t) {
      const std::size_t k = 1 + rng() % 10, length = k + rng() % 40, offset = 1 + rng() % (length - k + 1);
      const Clip c = sample_random_offset(length, k, offset, rng);
      bad += checks::clip_shape(c, length, k);
      for (auto id : c.frame_ids) bad += id < offset;
    }
    CHECK(bad == 0);
  }
  SUBCASE("inclusion frequency is k/(L-o+1) within 3 standard errors") {
    const std::size_t length = 20, k = 6, offset = 5, draws = 100000;
    std::map<std::size_t, double> hits;
    for (std::size_t t = 0; t < draws; ++t)
      for (auto id : sample_random_offset(length, k, offset, rng).frame_ids) hits[id] += 1.0;
    const double p = static_cast<double>(k) / static_cast<double>(length - offset + 1);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(draws));
    CHECK(hits.size() == length - offset + 1);
    for (std::size_t id = offset; id <= length; ++id) {
      CAPTURE(id);
      CHECK(std::abs(hits[id] / static_cast<double>(draws) - p) < 3.0 * se);
    }
  }
  CHECK_THROWS(sample_random_offset(10, 5, 7, rng));
}

TEST_CASE("partition sampling") {
  Rng rng(3);
  SUBCASE("L = k gives every frame") {
    CHECK(sample_partitioned(9, 9, rng).frame_ids == iota_ids(1, 9));
  }
  SUBCASE("L = 2k puts id i in {2i-1, 2i}") {
    for (int t = 0; t < 200; ++t) {
      const Clip c = sample_partitioned(16, 8, rng);
      for (std::size_t i = 1; i <= 8; ++i) CHECK((c.frame_ids[i - 1] == 2 * i - 1 || c.frame_ids[i - 1] == 2 * i));
    }
  }
  SUBCASE("partitions tile [1, L] with sizes differing by at most 1") {
    for (std::size_t length = 1; length < 60; ++length) {
      for (std::size_t k = 1; k <= length; ++k) {
        std::size_t covered = 0, smallest = length, largest = 0;
        for (std::size_t i = 1; i <= k; ++i) {
          const auto [lo, hi] = partition_bounds(length, k, i);
          CHECK(lo == checks::part_lo(length, k, i));
          CHECK(lo == covered);
          covered = hi;
          smallest = std::min(smallest, hi - lo);
          largest = std::max(largest, hi - lo);
        }
        CHECK(covered == length);
        CHECK(largest - smallest <= 1);
      }
    }
  }
  SUBCASE("each id in its partition over random (L, k)") {
    int bad = 0;
    for (int t = 0; t < 10000; ++t) {
      const std::size_t k = 1 + rng() % 20, length = k + rng() % 200;
      const Clip c = sample_partitioned(length, k, rng);
      bad += checks::clip_shape(c, length, k) + checks::partition_membership(c, length, k);
    }
    CHECK(bad == 0);
  }
  SUBCASE("uniform within a partition") {
    std::map<std::size_t, int> hits;
    const int draws = 40000;
    for (int t = 0; t < draws; ++t) hits[sample_partitioned(12, 3, rng).frame_ids[1]]++;
    CHECK(hits.size() == 4);
    for (const auto& [id, n] : hits) CHECK(std::abs(n / static_cast<double>(draws) - 0.25) < 0.01);
  }
  CHECK_THROWS(sample_partitioned(4, 5, rng));
}

TEST_CASE("epoch clips") {
  Rng rng(4);
  SamplerConfig cfg;
  for (auto layout : {EpochLayout::blocks, EpochLayout::interleaved}) {
    CAPTURE(to_string(layout));
    cfg.layout = layout;
    cfg.clip_size = 16;
    const auto clips = sample_epoch_clips(100, cfg, rng);
    CHECK(clips.size() == 6);
    std::set<std::size_t> ids;
    for (const auto& c : clips) ids.insert(c.frame_ids.begin(), c.frame_ids.end());
    CHECK(ids.size() == 96);
    CHECK(sample_epoch_clips(16, cfg, rng).size() == 1);
    CHECK_THROWS(sample_epoch_clips(15, cfg, rng));

    int bad = 0;
    for (int t = 0; t < 1000; ++t) {
      cfg.clip_size = 1 + rng() % 16;
      const std::size_t length = cfg.clip_size + rng() % 150;
      bad += checks::partition_epoch(sample_epoch_clips(length, cfg, rng), length, cfg.clip_size, layout);
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("interleaved clips span the whole video") {
  Rng rng(5);
  SamplerConfig cfg;
  cfg.clip_size = 4;
  for (int t = 0; t < 200; ++t) {
    for (const auto& c : sample_epoch_clips(40, cfg, rng)) {
      CHECK(c.frame_ids.front() <= 10);
      CHECK(c.frame_ids.back() > 30);
    }
  }
}

TEST_CASE("baseline strategies give floor(L/k) valid clips") {
  Rng rng(6);
  SamplerConfig cfg;
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    cfg.strategy = t % 2 ? Strategy::uniform_strided : Strategy::random_offset;
    cfg.clip_size = 1 + rng() % 8;
    cfg.stride = 1 + rng() % 4;
    const std::size_t length = (cfg.clip_size - 1) * cfg.stride + 1 + rng() % 60;
    const auto clips = sample_epoch_clips(length, cfg, rng);
    bad += clips.size() != length / cfg.clip_size;
    for (const auto& c : clips)
      bad += cfg.strategy == Strategy::uniform_strided ? checks::strided(c, length, cfg.clip_size, cfg.stride)
                                                       : checks::clip_shape(c, length, cfg.clip_size);
  }
  CHECK(bad == 0);
}

TEST_CASE("identical seeds give identical clips") {
  SamplerConfig cfg;
  for (auto s : {Strategy::partition, Strategy::uniform_strided, Strategy::random_offset}) {
    cfg.strategy = s;
    Rng a(77), b(77);
    CHECK(sample_epoch_clips(203, cfg, a) == sample_epoch_clips(203, cfg, b));
  }
}
