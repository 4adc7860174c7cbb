#include "goalflow/scenario/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>

#include "goalflow/nn/random.hpp"
#include "goalflow/scenario/geometry.hpp"
#include "goalflow/scenario/kinematics.hpp"

namespace goalflow::scenario {

namespace {

constexpr double kRouteStart = -10.0;
constexpr double kStraightEnd = 110.0;
constexpr double kExitLength = 50.0;
constexpr double kExpertLateralAccel = 2.0;
constexpr double kMinPathLength = 8.0;
constexpr double kMaxPathLength = 40.0;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

/// Route centerline: straight, optionally followed by a 90 degree arc and an
/// exit straight. Arc length coordinate s is zero at the ego's projection.
struct Route {
  double lateral0 = 0;    // ego offset from the centerline at s=0 (left positive)
  double turn_start = 0;  // s where the arc begins
  double radius = 0;      // 0 for straight routes
  double turn_sign = 0;   // +1 left, -1 right

  double arc_length() const { return radius * std::numbers::pi / 2; }
  double end() const { return radius > 0 ? turn_start + arc_length() + kExitLength : kStraightEnd; }

  Pose at(double s) const {
    const double y0 = -lateral0;
    if (radius <= 0 || s <= turn_start) return {s, y0, 0.0};
    const double phi = std::min(s - turn_start, arc_length()) / radius;
    Pose p{turn_start + radius * std::sin(phi), y0 + turn_sign * radius * (1 - std::cos(phi)),
           turn_sign * phi};
    const double extra = s - turn_start - arc_length();
    if (extra > 0) {
      p.x += extra * std::cos(p.heading);
      p.y += extra * std::sin(p.heading);
    }
    return p;
  }

  Vec2 offset(double s, double lateral) const {
    const Pose p = at(s);
    return {p.x - lateral * std::sin(p.heading), p.y + lateral * std::cos(p.heading)};
  }

  /// Sample positions: dense along the arc, endpoints only on straights.
  std::vector<double> stations() const {
    std::vector<double> s{kRouteStart};
    if (radius > 0) {
      const int n = std::max(8, static_cast<int>(std::ceil(arc_length())));
      for (int i = 0; i <= n; ++i) s.push_back(turn_start + arc_length() * i / n);
    }
    s.push_back(end());
    return s;
  }
};

/// Expert plan along the route.
struct Plan {
  Route route;
  double width = 8;
  double v0 = 5;
  double accel = 0;
  double stop_distance = -1;  // >= 0 when the plan stops (yield)
  double lateral_target = 0;
  double lane_change_time = 0;  // 0: no lane change

  double station(double t) const {
    if (v0 <= 0) return 0;
    if (accel < 0) {
      const double t_stop = v0 / -accel;
      const double tt = std::min(t, t_stop);
      return v0 * tt + 0.5 * accel * tt * tt;
    }
    return v0 * t + 0.5 * accel * t * t;
  }

  double lateral(double t) const {
    if (lane_change_time <= 0) return route.lateral0;
    const double u = std::clamp(t / lane_change_time, 0.0, 1.0);
    const double smooth = u * u * (3 - 2 * u);
    return route.lateral0 + (lateral_target - route.lateral0) * smooth;
  }

  Vec2 position(double t) const { return route.offset(station(t), lateral(t)); }

  Pose pose(double t) const {
    const Vec2 p = position(t);
    const double h = 1e-4;
    const Vec2 a = position(std::max(0.0, t - h)), b = position(t + h);
    double heading = route.at(station(t)).heading;
    if (std::hypot(b.x - a.x, b.y - a.y) > 1e-7) heading = std::atan2(b.y - a.y, b.x - a.x);
    return {p.x, p.y, heading};
  }
};

Polygon corridor_polygon(const Route& route, double width) {
  Polygon left, right;
  for (double s : route.stations()) {
    left.push_back(route.offset(s, width / 2));
    right.push_back(route.offset(s, -width / 2));
  }
  Polygon poly(right.begin(), right.end());
  poly.insert(poly.end(), left.rbegin(), left.rend());
  return poly;
}

/// Main road crossed by a perpendicular road between x_lo and x_hi.
Polygon crossroad_polygon(const Route& route, double width, double x_lo, double x_hi) {
  const double yb = -route.lateral0 - width / 2, yt = -route.lateral0 + width / 2;
  constexpr double reach = 40;
  return {{kRouteStart, yb}, {x_lo, yb},  {x_lo, -reach}, {x_hi, -reach},
          {x_hi, yb},        {kStraightEnd, yb}, {kStraightEnd, yt}, {x_hi, yt},
          {x_hi, reach},     {x_lo, reach}, {x_lo, yt},     {kRouteStart, yt}};
}

/// Stops short of the polygon's end caps so the line stays strictly inside.
Polyline centerline_of(const Route& route) {
  std::vector<double> stations = route.stations();
  stations.front() += 0.5;
  stations.back() -= 0.5;
  Polyline line;
  for (double s : stations) {
    const Pose p = route.at(s);
    line.push_back({p.x, p.y});
  }
  return line;
}

HalfExtents random_car(Rng& rng) {
  if (coin(rng, 0.15)) return {uniform(rng, 3.5, 5.0), uniform(rng, 1.15, 1.3)};
  return {uniform(rng, 2.1, 2.5), uniform(rng, 0.85, 1.0)};
}

/// Whether the expert keeps clear of every agent under the waypoint, TTC and
/// a dense-time check with a safety margin.
bool expert_clear(const Trajectory& traj, const HalfExtents& ego, const std::vector<AgentState>& agents) {
  if (collides_at_waypoints(traj, ego, agents)) return false;
  if (collides_within_horizon(traj, ego, agents, 1.2, 0.1)) return false;
  const HalfExtents inflated{ego.length + 0.4, ego.width + 0.4};
  for (int k = 0; k <= 50; ++k) {
    const double t = 0.1 * k;
    const Corners e = footprint_corners(interpolate_pose(traj, t), inflated);
    for (const auto& a : agents) {
      if (boxes_overlap(e, agent_corners_at(a, t))) return false;
    }
  }
  return true;
}

AgentState parked_agent(const Plan& plan, Rng& rng) {
  const double s = uniform(rng, 5, 60);
  const double side = coin(rng, 0.5) ? 1.0 : -1.0;
  AgentState a;
  a.half_extents = random_car(rng);
  const double lateral = side * (plan.width / 2 - 0.5 * a.half_extents.width);
  a.center = plan.route.offset(s, lateral);
  a.heading = plan.route.at(s).heading;
  return a;
}

AgentState lead_agent(const Plan& plan, const Trajectory& expert, Rng& rng) {
  AgentState a;
  a.half_extents = random_car(rng);
  const double gap = uniform(rng, 12, 40);
  a.center = plan.route.offset(gap, plan.route.lateral0);
  const auto prof = motion_profile(expert);
  const double v_end = std::hypot(prof.velocity.back().x, prof.velocity.back().y);
  const double v = v_end + uniform(rng, 0.0, 3.0);
  a.velocity = {v, 0};
  return a;
}

AgentState oncoming_agent(const Plan& plan, Rng& rng) {
  AgentState a;
  a.half_extents = random_car(rng);
  const double lateral = -plan.route.lateral0;
  a.center = plan.route.offset(uniform(rng, 25, 90), lateral);
  a.heading = std::numbers::pi;
  a.velocity = {-uniform(rng, 3, 10), 0};
  return a;
}

AgentState crossing_agent(double x_lo, double x_hi, Rng& rng) {
  AgentState a;
  a.half_extents = random_car(rng);
  const bool northbound = coin(rng, 0.5);
  const double lane = (x_hi - x_lo) / 4;
  const double mid = 0.5 * (x_lo + x_hi);
  const double speed = uniform(rng, 4, 9);
  const double t_cross = uniform(rng, 0.0, 4.0);
  a.center = {northbound ? mid + lane : mid - lane, northbound ? -speed * t_cross : speed * t_cross};
  a.heading = northbound ? std::numbers::pi / 2 : -std::numbers::pi / 2;
  a.velocity = {0, northbound ? speed : -speed};
  return a;
}

ScenarioKind draw_kind(const KindMix& mix, Rng& rng) {
  std::discrete_distribution<int> dist({mix.straight, mix.left, mix.right, mix.yield});
  return static_cast<ScenarioKind>(dist(rng));
}

bool valid_expert(const Trajectory& traj, const Scene& scene) {
  for (const Pose& p : traj.poses) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.heading)) return false;
    if (!footprint_inside(p, scene.ego.half_extents, scene.drivable_area)) return false;
  }
  if (!footprint_inside({0, 0, 0}, scene.ego.half_extents, scene.drivable_area)) return false;
  return within_comfort(motion_profile(traj), ComfortBounds{4.0, 7.0, 0.8});
}

std::optional<Sample> try_generate(ScenarioKind kind, Rng& rng) {
  Scene scene;
  scene.kind = kind;
  scene.ego.half_extents = {uniform(rng, 2.25, 2.5), uniform(rng, 0.9, 1.05)};

  Plan plan;
  plan.width = uniform(rng, 6, 14);
  const double margin = plan.width / 2 - scene.ego.half_extents.width - 0.9;
  double lateral0;
  if (plan.width >= 9) {
    lateral0 = (coin(rng, 0.7) ? -1.0 : 1.0) * plan.width / 4 + uniform(rng, -0.3, 0.3);
  } else {
    lateral0 = uniform(rng, -0.4, 0.4);
  }
  lateral0 = std::clamp(lateral0, -margin, margin);
  plan.route.lateral0 = lateral0;

  double x_lo = 0, x_hi = 0;
  switch (kind) {
    case ScenarioKind::Straight:
      plan.v0 = uniform(rng, 4, 9);
      plan.accel = uniform(rng, -1.0, 0.5);
      if (plan.width >= 10 && coin(rng, 0.25)) {
        plan.lateral_target = std::clamp(-lateral0, -margin, margin);
        plan.lane_change_time = uniform(rng, 3.0, 4.0);
      }
      break;
    case ScenarioKind::Left:
    case ScenarioKind::Right: {
      plan.route.turn_sign = kind == ScenarioKind::Left ? 1.0 : -1.0;
      plan.route.radius = uniform(rng, 12, 25);
      const double path_radius = plan.route.radius - plan.route.turn_sign * lateral0;
      const double v_max = std::min(8.0, std::sqrt(kExpertLateralAccel * path_radius));
      plan.v0 = uniform(rng, 3.0, std::max(3.0, v_max));
      plan.accel = uniform(rng, -0.5, 0.0);
      const double travel = plan.station(kStepSeconds * kHorizon);
      plan.route.turn_start = uniform(rng, 1.0, std::max(1.0, 0.4 * travel));
      break;
    }
    case ScenarioKind::Yield: {
      plan.v0 = coin(rng, 0.25) ? 0.0 : uniform(rng, 3, 8);
      const double min_stop = std::max(3.0, plan.v0 * plan.v0 / (2 * 2.0));
      plan.stop_distance = uniform(rng, min_stop, std::max(min_stop, 25.0));
      plan.accel = plan.v0 > 0 ? -plan.v0 * plan.v0 / (2 * plan.stop_distance) : 0.0;
      x_lo = plan.stop_distance + scene.ego.half_extents.length + uniform(rng, 1.0, 2.5);
      x_hi = x_lo + uniform(rng, 7, 12);
      break;
    }
  }

  scene.drivable_area = kind == ScenarioKind::Yield ? crossroad_polygon(plan.route, plan.width, x_lo, x_hi)
                                                    : corridor_polygon(plan.route, plan.width);
  scene.centerline = centerline_of(plan.route);
  scene.ego.velocity = {plan.v0, 0};
  scene.ego.acceleration = {plan.accel, 0};
  scene.ego.heading = 0;

  Trajectory traj;
  for (std::size_t i = 0; i < kHorizon; ++i) traj.poses[i] = plan.pose(kStepSeconds * (i + 1));
  if (!valid_expert(traj, scene)) return std::nullopt;
  if (kind != ScenarioKind::Yield) {
    double length = 0;
    Vec2 prev{0, 0};
    for (const Pose& p : traj.poses) {
      length += std::hypot(p.x - prev.x, p.y - prev.y);
      prev = {p.x, p.y};
    }
    if (length < kMinPathLength || length > kMaxPathLength) return std::nullopt;
  }

  const int n_agents = std::uniform_int_distribution<int>(0, 4)(rng);
  for (int n = 0; n < n_agents; ++n) {
    for (int attempt = 0; attempt < 10; ++attempt) {
      AgentState candidate;
      const double pick = uniform(rng, 0, 1);
      if (kind == ScenarioKind::Yield && pick < 0.6) {
        candidate = crossing_agent(x_lo, x_hi, rng);
      } else if (kind == ScenarioKind::Straight && pick < 0.35) {
        candidate = lead_agent(plan, traj, rng);
      } else if (kind == ScenarioKind::Straight && pick < 0.6 && plan.width >= 9) {
        candidate = oncoming_agent(plan, rng);
      } else {
        candidate = parked_agent(plan, rng);
      }
      auto agents = scene.agents;
      agents.push_back(candidate);
      if (expert_clear(traj, scene.ego.half_extents, agents)) {
        scene.agents = std::move(agents);
        break;
      }
    }
  }

  Sample sample;
  sample.scene = std::move(scene);
  sample.tau_gt = traj;
  sample.goal_gt = traj.back();
  return sample;
}

}  // namespace

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Straight: return "straight";
    case ScenarioKind::Left: return "left";
    case ScenarioKind::Right: return "right";
    case ScenarioKind::Yield: return "yield";
  }
  return "straight";
}

ScenarioKind kind_from_string(const std::string& name) {
  if (name == "straight") return ScenarioKind::Straight;
  if (name == "left") return ScenarioKind::Left;
  if (name == "right") return ScenarioKind::Right;
  if (name == "yield") return ScenarioKind::Yield;
  throw std::invalid_argument("unknown scenario kind '" + name + "'");
}

Sample generate_sample(std::uint64_t seed, std::uint64_t index, const KindMix& mix) {
  Rng rng(derive_seed(seed, index));
  const ScenarioKind kind = draw_kind(mix, rng);
  for (int attempt = 0; attempt < 100; ++attempt) {
    if (auto s = try_generate(kind, rng)) return *std::move(s);
  }
  throw std::logic_error("generate_sample: no valid expert found for sample " + std::to_string(index));
}

std::vector<Sample> generate_dataset(std::uint64_t seed, std::size_t count, const KindMix& mix) {
  if (count == 0) throw std::invalid_argument("generate_dataset: count must be positive");
  const double total = mix.straight + mix.left + mix.right + mix.yield;
  if (!(total > 0) || mix.straight < 0 || mix.left < 0 || mix.right < 0 || mix.yield < 0) {
    throw std::invalid_argument("generate_dataset: kind mix needs non-negative weights with a positive sum");
  }
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_sample(seed, i, mix));
  return out;
}

}  // namespace goalflow::scenario
