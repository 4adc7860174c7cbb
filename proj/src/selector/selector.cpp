#include "goalflow/selector/selector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "goalflow/scenario/geometry.hpp"

namespace goalflow::selector {

std::vector<double> minimax_normalize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("minimax_normalize: empty input");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  std::vector<double> out(values.size(), 0.5);
  if (range > 0) {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
  }
  return out;
}

double centerline_progress(const scenario::Trajectory& traj, const scenario::Polyline& centerline) {
  const auto& end = traj.back();
  return scenario::project_onto_polyline({end.x, end.y}, centerline) -
         scenario::project_onto_polyline({0.0, 0.0}, centerline);
}

Selection score_candidates(std::span<const scenario::Trajectory> candidates, const scenario::GoalPoint& goal,
                           const scenario::Polyline& centerline, double lambda1, double lambda2) {
  if (candidates.empty()) throw std::invalid_argument("score_candidates: no candidates");
  Selection sel;
  std::vector<double> dis, pg;
  for (const auto& c : candidates) {
    dis.push_back(std::hypot(c.back().x - goal.x, c.back().y - goal.y));
    pg.push_back(centerline_progress(c, centerline));
  }
  const auto phi_dis = minimax_normalize(dis);
  const auto phi_pg = minimax_normalize(pg);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    CandidateScore s{dis[i], pg[i], phi_dis[i], phi_pg[i], -lambda1 * phi_dis[i] + lambda2 * phi_pg[i]};
    sel.scores.push_back(s);
    if (s.f > sel.scores[sel.best].f) sel.best = i;
  }
  return sel;
}

double mean_deviation(const scenario::Trajectory& a, const scenario::Trajectory& b) {
  double total = 0;
  for (std::size_t i = 0; i < scenario::kHorizon; ++i) {
    total += std::hypot(a.poses[i].x - b.poses[i].x, a.poses[i].y - b.poses[i].y);
  }
  return total / static_cast<double>(scenario::kHorizon);
}

FallbackResult shadow_fallback(const scenario::Trajectory& main, const scenario::Trajectory& shadow,
                               double threshold_m) {
  const double dev = mean_deviation(main, shadow);
  if (dev > threshold_m) return {shadow, true, dev};
  return {main, false, dev};
}

}  // namespace goalflow::selector
