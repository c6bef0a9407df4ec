#pragma once

#include <cstdint>
#include <random>

namespace curigs {

/// Every sampling routine takes one of these explicitly; there is no global
/// random state anywhere in the library.
using Rng = std::mt19937_64;

/// Deterministic child seed for an independent stream (splitmix64 mix).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) { return Rng(derive_seed(seed, stream)); }

}  // namespace curigs
