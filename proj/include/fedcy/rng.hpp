#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fedcy {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of an independent stream identified by a parent seed and a path of
/// tags (client index, round, purpose...).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = mix64(parent);
  for (std::uint64_t tag : path) s = mix64(s ^ mix64(tag + 0x632be59bd9b4e019ULL));
  return s;
}

inline std::mt19937_64 derive_rng(std::uint64_t parent, std::initializer_list<std::uint64_t> path) {
  return std::mt19937_64(derive_seed(parent, path));
}

// Stream purposes used with derive_seed.
namespace stream {
inline constexpr std::uint64_t kScenario = 1;
inline constexpr std::uint64_t kClient = 2;
inline constexpr std::uint64_t kVideo = 3;
inline constexpr std::uint64_t kInit = 4;
inline constexpr std::uint64_t kLocalEpoch = 5;
inline constexpr std::uint64_t kPretrain = 6;
inline constexpr std::uint64_t kProfile = 7;
inline constexpr std::uint64_t kSplit = 8;
}  // namespace stream

}  // namespace fedcy
