#include "goalflow/selector/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "goalflow/scenario/geometry.hpp"
#include "goalflow/selector/selector.hpp"

namespace goalflow::selector {

double metric_nc(const scenario::Trajectory& traj, const scenario::Scene& scene) {
  return scenario::collides_at_waypoints(traj, scene.ego.half_extents, scene.agents) ? 0.0 : 1.0;
}

double metric_dac(const scenario::Trajectory& traj, const scenario::Scene& scene) {
  for (const auto& p : traj.poses) {
    if (!scenario::footprint_inside(p, scene.ego.half_extents, scene.drivable_area)) return 0.0;
  }
  return 1.0;
}

double metric_ttc(const scenario::Trajectory& traj, const scenario::Scene& scene, double horizon_s, double dt_s) {
  return scenario::collides_within_horizon(traj, scene.ego.half_extents, scene.agents, horizon_s, dt_s) ? 0.0 : 1.0;
}

double metric_comfort(const scenario::Trajectory& traj, const scenario::ComfortBounds& bounds) {
  return scenario::within_comfort(scenario::motion_profile(traj), bounds) ? 1.0 : 0.0;
}

double metric_ep(const scenario::Trajectory& traj, const scenario::Scene& scene,
                 const scenario::Trajectory& reference, double min_reference_progress) {
  const double ref = centerline_progress(reference, scene.centerline);
  if (ref < min_reference_progress) return 1.0;
  return std::clamp(centerline_progress(traj, scene.centerline) / ref, 0.0, 1.0);
}

double metric_ddc(const scenario::Trajectory& traj, const scenario::Scene& scene) {
  for (const auto& p : traj.poses) {
    const double lane = scenario::polyline_heading_near({p.x, p.y}, scene.centerline);
    if (std::abs(scenario::wrap_angle(p.heading - lane)) > std::numbers::pi / 2) return 0.0;
  }
  return 1.0;
}

double pdm_score(double nc, double dac, double ttc, double ep, double cf, double ddc) {
  const std::pair<const char*, double> all[] = {{"nc", nc}, {"dac", dac}, {"ttc", ttc},
                                                {"ep", ep}, {"cf", cf},   {"ddc", ddc}};
  for (const auto& [name, v] : all) {
    if (!(v >= 0 && v <= 1)) {
      throw std::invalid_argument(std::string("pdm_score: subscore ") + name + " = " + std::to_string(v) +
                                  " outside [0, 1]");
    }
  }
  return nc * dac * ttc * ((5 * ep + 5 * cf + 2 * ddc) / 12.0);
}

MetricReport evaluate(const scenario::Trajectory& traj, const scenario::Scene& scene,
                      const scenario::Trajectory& reference, const MetricOptions& options) {
  MetricReport r;
  r.nc = metric_nc(traj, scene);
  r.dac = metric_dac(traj, scene);
  r.ttc = metric_ttc(traj, scene, options.ttc_horizon_s, options.ttc_step_s);
  r.cf = metric_comfort(traj, options.comfort);
  r.ep = metric_ep(traj, scene, reference, options.min_reference_progress);
  r.ddc = options.check_direction ? metric_ddc(traj, scene) : 1.0;
  r.pdm = pdm_score(r.nc, r.dac, r.ttc, r.ep, r.cf, r.ddc);
  return r;
}

}  // namespace goalflow::selector
