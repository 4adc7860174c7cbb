#pragma once

#include <cstdint>
#include <random>

namespace goalflow {

using Rng = std::mt19937_64;

/// Mixes a base seed with stream indices (splitmix64 finalizer) so that
/// per-sample and per-candidate streams are independent of iteration order.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t z = base;
  for (std::uint64_t v : {a, b}) {
    z += 0x9E3779B97F4A7C15ULL + v;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
  }
  return z;
}

}  // namespace goalflow
