#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace aggerr {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mixSeed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Sub-seed for a task identified by a path of indices below a master seed,
// e.g. deriveSeed(seed, {scenario, industry, attempt}). Order matters.
inline std::uint64_t deriveSeed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = mixSeed(master);
  for (std::uint64_t p : path) s = mixSeed(s ^ mixSeed(p + 0x632BE59BD9B4E019ULL));
  return s;
}

inline Rng makeRng(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return Rng(deriveSeed(master, path));
}

// Uniform double in [0,1) from the top 53 bits. Unlike
// std::uniform_real_distribution this is identical across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection; n > 0.
inline std::uint64_t uniformIndex(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace aggerr
