#pragma once

#include <cstdint>
#include <random>

namespace dynq {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a base seed (splitmix64 finalizer).
/// Used to give network init, training, and evaluation their own streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Uniform double in [0, 1). Bit-derived so sequences do not depend on the
/// standard library's distribution implementation.
inline double next_canonical(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n).
inline int next_index(Rng& rng, int n) {
  return static_cast<int>(next_canonical(rng) * static_cast<double>(n));
}

}  // namespace dynq
