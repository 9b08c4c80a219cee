#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace uwfl {

using Rng = std::mt19937_64;

/// Execution policy for kernels that have an OpenMP path and a serial
/// reference path. Both must produce bit-identical results.
enum class Execution { Serial, Parallel };

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream seed from a master seed and a path of stream ids
/// (e.g. {kStreamTrain, round, sensor}). Order of the ids matters.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master);
  for (auto id : path) h = splitmix64(h ^ splitmix64(id + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(master, path));
}

// Stream tags.
inline constexpr std::uint64_t kStreamTopology = 1;
inline constexpr std::uint64_t kStreamData = 2;
inline constexpr std::uint64_t kStreamInit = 3;
inline constexpr std::uint64_t kStreamTrain = 4;
inline constexpr std::uint64_t kStreamMobility = 5;
inline constexpr std::uint64_t kStreamAnomaly = 6;

}  // namespace uwfl
