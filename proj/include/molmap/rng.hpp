#pragma once
#include <cstdint>
#include <random>

namespace molmap {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d4a2fa58b5df1fULL;
  return x ^ (x >> 31);
}

/// Deterministic per-pixel substream: results do not depend on the order in
/// which pixels are processed or on the number of worker threads.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t counter) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(counter + 0x51ed270b0f4dULL)));
}

}  // namespace molmap
