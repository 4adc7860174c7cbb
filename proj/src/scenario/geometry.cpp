#include "goalflow/scenario/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "goalflow/scenario/kinematics.hpp"

namespace goalflow::scenario {

namespace {

constexpr double kBoundaryTol = 1e-12;

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  if (std::abs(cross(a, b, p)) > kBoundaryTol * std::max(1.0, len)) return false;
  return p.x >= std::min(a.x, b.x) - kBoundaryTol && p.x <= std::max(a.x, b.x) + kBoundaryTol &&
         p.y >= std::min(a.y, b.y) - kBoundaryTol && p.y <= std::max(a.y, b.y) + kBoundaryTol;
}

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = cross(c, d, a), d2 = cross(c, d, b), d3 = cross(a, b, c), d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  return on_segment(a, c, d) || on_segment(b, c, d) || on_segment(c, a, b) || on_segment(d, a, b);
}

Vec2 closest_on_segment(const Vec2& p, const Vec2& a, const Vec2& b, double& u) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  u = len2 > 0 ? std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0) : 0.0;
  return {a.x + u * dx, a.y + u * dy};
}

std::size_t nearest_segment(const Vec2& p, const Polyline& line, double& u_out) {
  if (line.size() < 2) throw std::invalid_argument("polyline needs at least 2 points");
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    double u;
    const Vec2 c = closest_on_segment(p, line[i], line[i + 1], u);
    const double d = std::hypot(p.x - c.x, p.y - c.y);
    if (d < best) {
      best = d;
      best_i = i;
      u_out = u;
    }
  }
  return best_i;
}

}  // namespace

double polygon_area(const Polygon& poly) {
  double a = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

bool polygon_is_simple(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

bool point_in_polygon(const Vec2& p, const Polygon& poly) {
  if (poly.size() < 3 || std::abs(polygon_area(poly)) < 1e-12) {
    throw std::invalid_argument("point_in_polygon: degenerate polygon with " +
                                std::to_string(poly.size()) + " vertices");
  }
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if (on_segment(p, a, b)) return false;
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

Corners footprint_corners(const Pose& pose, const HalfExtents& e) {
  const double c = std::cos(pose.heading), s = std::sin(pose.heading);
  auto at = [&](double lon, double lat) {
    return Vec2{pose.x + lon * c - lat * s, pose.y + lon * s + lat * c};
  };
  return {at(e.length, e.width), at(e.length, -e.width), at(-e.length, -e.width),
          at(-e.length, e.width)};
}

bool footprint_inside(const Pose& pose, const HalfExtents& half_extents, const Polygon& poly) {
  for (const Vec2& c : footprint_corners(pose, half_extents)) {
    if (!point_in_polygon(c, poly)) return false;
  }
  return true;
}

bool boxes_overlap(const Corners& a, const Corners& b) {
  for (const Corners* box : {&a, &b}) {
    for (std::size_t i = 0; i < 2; ++i) {
      const Vec2& p = (*box)[i];
      const Vec2& q = (*box)[i + 1];
      const Vec2 axis{-(q.y - p.y), q.x - p.x};
      double amin = std::numeric_limits<double>::infinity(), amax = -amin;
      double bmin = amin, bmax = -amin;
      for (const Vec2& c : a) {
        const double v = c.x * axis.x + c.y * axis.y;
        amin = std::min(amin, v);
        amax = std::max(amax, v);
      }
      for (const Vec2& c : b) {
        const double v = c.x * axis.x + c.y * axis.y;
        bmin = std::min(bmin, v);
        bmax = std::max(bmax, v);
      }
      if (amax < bmin || bmax < amin) return false;
    }
  }
  return true;
}

Corners agent_corners_at(const AgentState& agent, double t) {
  return footprint_corners(
      {agent.center.x + agent.velocity.x * t, agent.center.y + agent.velocity.y * t, agent.heading},
      agent.half_extents);
}

double project_onto_polyline(const Vec2& p, const Polyline& line) {
  double u = 0;
  const std::size_t seg = nearest_segment(p, line, u);
  double s = 0;
  for (std::size_t i = 0; i < seg; ++i) s += std::hypot(line[i + 1].x - line[i].x, line[i + 1].y - line[i].y);
  return s + u * std::hypot(line[seg + 1].x - line[seg].x, line[seg + 1].y - line[seg].y);
}

double polyline_heading_near(const Vec2& p, const Polyline& line) {
  double u = 0;
  const std::size_t seg = nearest_segment(p, line, u);
  return std::atan2(line[seg + 1].y - line[seg].y, line[seg + 1].x - line[seg].x);
}

double wrap_angle(double a) {
  constexpr double two_pi = 2 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a <= 0) a += two_pi;
  return a - std::numbers::pi;
}

// ---- kinematics -----------------------------------------------------------

MotionProfile motion_profile(const Trajectory& traj) {
  std::array<Pose, kHorizon + 1> p{};
  std::copy(traj.poses.begin(), traj.poses.end(), p.begin() + 1);
  const double dt = kStepSeconds;
  MotionProfile out;
  for (std::size_t i = 1; i <= kHorizon; ++i) {
    out.velocity.push_back({(p[i].x - p[i - 1].x) / dt, (p[i].y - p[i - 1].y) / dt});
    out.yaw_rate.push_back(std::abs(wrap_angle(p[i].heading - p[i - 1].heading)) / dt);
  }
  std::vector<Vec2> acc;
  for (std::size_t i = 1; i + 1 <= kHorizon; ++i) {
    const Vec2 a{(p[i + 1].x - 2 * p[i].x + p[i - 1].x) / (dt * dt),
                 (p[i + 1].y - 2 * p[i].y + p[i - 1].y) / (dt * dt)};
    acc.push_back(a);
    out.accel.push_back(std::hypot(a.x, a.y));
  }
  for (std::size_t i = 0; i + 1 < acc.size(); ++i) {
    out.jerk.push_back(std::hypot(acc[i + 1].x - acc[i].x, acc[i + 1].y - acc[i].y) / dt);
  }
  return out;
}

bool within_comfort(const MotionProfile& profile, const ComfortBounds& bounds) {
  // Small slack so a value constructed exactly at a bound stays inside it.
  auto ok = [](const std::vector<double>& v, double bound) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x <= bound * (1 + 1e-9); });
  };
  return ok(profile.accel, bounds.max_accel) && ok(profile.jerk, bounds.max_jerk) &&
         ok(profile.yaw_rate, bounds.max_yaw_rate);
}

bool collides_at_waypoints(const Trajectory& traj, const HalfExtents& ego,
                           const std::vector<AgentState>& agents) {
  for (std::size_t i = 0; i < kHorizon; ++i) {
    const Corners e = footprint_corners(traj.poses[i], ego);
    const double t = kStepSeconds * static_cast<double>(i + 1);
    for (const auto& agent : agents) {
      if (boxes_overlap(e, agent_corners_at(agent, t))) return true;
    }
  }
  return false;
}

bool collides_within_horizon(const Trajectory& traj, const HalfExtents& ego,
                             const std::vector<AgentState>& agents, double horizon_s,
                             double dt_s) {
  if (agents.empty()) return false;
  const MotionProfile profile = motion_profile(traj);
  const int steps = static_cast<int>(std::lround(horizon_s / dt_s));
  for (std::size_t i = 0; i < kHorizon; ++i) {
    const Pose& p = traj.poses[i];
    const Vec2 v = profile.velocity[i];
    const double t0 = kStepSeconds * static_cast<double>(i + 1);
    for (int k = 0; k <= steps; ++k) {
      const double dt = dt_s * k;
      const Corners e = footprint_corners({p.x + v.x * dt, p.y + v.y * dt, p.heading}, ego);
      for (const auto& agent : agents) {
        if (boxes_overlap(e, agent_corners_at(agent, t0 + dt))) return true;
      }
    }
  }
  return false;
}

Pose interpolate_pose(const Trajectory& traj, double t) {
  const double total = kStepSeconds * kHorizon;
  if (t >= total) {
    const Pose& last = traj.poses[kHorizon - 1];
    const Pose& prev = traj.poses[kHorizon - 2];
    const double f = (t - total) / kStepSeconds;
    return {last.x + f * (last.x - prev.x), last.y + f * (last.y - prev.y), last.heading};
  }
  const double idx = std::max(t, 0.0) / kStepSeconds;
  const auto i = static_cast<std::size_t>(idx);
  const double f = idx - static_cast<double>(i);
  const Pose a = i == 0 ? Pose{} : traj.poses[i - 1];
  const Pose& b = traj.poses[i];
  return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y),
          a.heading + f * wrap_angle(b.heading - a.heading)};
}

}  // namespace goalflow::scenario
