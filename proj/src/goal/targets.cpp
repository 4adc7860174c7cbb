#include "goalflow/goal/targets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "goalflow/scenario/geometry.hpp"

namespace goalflow::goal {

nn::Tensor target_distance_scores(const std::vector<scenario::GoalPoint>& vocab,
                                  const scenario::GoalPoint& goal_gt) {
  if (vocab.empty()) throw std::invalid_argument("target_distance_scores: empty vocabulary");
  nn::Tensor out({vocab.size()});
  double min_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out[i] = std::hypot(vocab[i].x - goal_gt.x, vocab[i].y - goal_gt.y);
    min_d = std::min(min_d, out[i]);
  }
  double z = 0;
  for (auto& v : out.storage()) z += (v = std::exp(min_d - v));
  for (auto& v : out.storage()) v /= z;
  return out;
}

nn::Tensor target_dac_scores(const std::vector<scenario::GoalPoint>& vocab,
                             const scenario::Polygon& drivable,
                             const scenario::HalfExtents& ego_half_extents) {
  nn::Tensor out({vocab.size()});
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out[i] = scenario::footprint_inside(vocab[i], ego_half_extents, drivable) ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace goalflow::goal
