#pragma once

#include <cstdint>
#include <vector>

#include "goalflow/scenario/types.hpp"

namespace goalflow::scenario {

/// Relative weights of the scenario kinds; need not sum to one.
struct KindMix {
  double straight = 0.4;
  double left = 0.2;
  double right = 0.2;
  double yield = 0.2;
  friend bool operator==(const KindMix&, const KindMix&) = default;
};

/// One synthetic sample. Pure function of (seed, index, mix).
Sample generate_sample(std::uint64_t seed, std::uint64_t index, const KindMix& mix);

/// `count` samples; sample i is generate_sample(seed, i, mix). Throws
/// std::invalid_argument when count is zero or the mix has no positive weight.
std::vector<Sample> generate_dataset(std::uint64_t seed, std::size_t count, const KindMix& mix);

}  // namespace goalflow::scenario
