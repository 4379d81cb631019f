#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tole {

using Rng = std::mt19937_64;

/// Seed for an independent substream, mixed with the splitmix64 finaliser
/// so nearby (seed, stream) pairs give unrelated generators.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  std::uint64_t z = seed;
  for (std::uint64_t s : stream) {
    z += 0x9e3779b97f4a7c15ULL + s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
  }
  return z;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  return Rng(derive_seed(seed, stream));
}

}  // namespace tole
