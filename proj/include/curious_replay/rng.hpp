#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace cr {

using Rng = std::mt19937_64;

/// splitmix64 finalizer. Derives well-separated stream seeds from one run
/// seed so that e.g. the policy, the model init, and each ensemble member
/// consume independent generators.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix_seed(seed, stream));
}

/// Uniform double in [0, 1) from the top 53 bits of one draw. Unlike
/// std::uniform_real_distribution the result is identical across standard
/// library implementations.
inline double random_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform index in [0, n). Consumes exactly one draw.
inline std::size_t random_index(Rng& rng, std::size_t n) {
  const auto i = static_cast<std::size_t>(random_unit(rng) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

}  // namespace cr
