#pragma once

#include <vector>

#include "goalflow/nn/tensor.hpp"
#include "goalflow/scenario/types.hpp"

namespace goalflow::goal {

/// Softmax of negative planar distance to the ground-truth goal, [N].
nn::Tensor target_distance_scores(const std::vector<scenario::GoalPoint>& vocab,
                                  const scenario::GoalPoint& goal_gt);

/// 1 where an ego-sized box at the vocabulary pose lies strictly inside the
/// drivable area, else 0. [N]
nn::Tensor target_dac_scores(const std::vector<scenario::GoalPoint>& vocab,
                             const scenario::Polygon& drivable,
                             const scenario::HalfExtents& ego_half_extents);

}  // namespace goalflow::goal
