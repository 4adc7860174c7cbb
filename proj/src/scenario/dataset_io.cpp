#include "goalflow/scenario/dataset_io.hpp"

#include <fstream>
#include <sstream>

namespace goalflow::scenario {

using nlohmann::json;

namespace {

json vec(const Vec2& v) { return json::array({v.x, v.y}); }

Vec2 vec_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) throw DatasetError(std::string(what) + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

HalfExtents extents_from(const json& j) {
  const Vec2 v = vec_from(j, "half_extents");
  if (!(v.x > 0) || !(v.y > 0)) throw DatasetError("half_extents must be positive");
  return {v.x, v.y};
}

std::vector<Vec2> points_from(const json& j, const char* what) {
  if (!j.is_array()) throw DatasetError(std::string(what) + ": expected an array of points");
  std::vector<Vec2> out;
  for (const auto& p : j) out.push_back(vec_from(p, what));
  return out;
}

const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw DatasetError(std::string("expected an object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) throw DatasetError(std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace

json to_json(const Pose& p) { return json::array({p.x, p.y, p.heading}); }

Pose pose_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw DatasetError("pose: expected [x, y, heading]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const Trajectory& traj) {
  json out = json::array();
  for (const Pose& p : traj.poses) out.push_back(to_json(p));
  return out;
}

Trajectory trajectory_from_json(const json& j) {
  if (!j.is_array() || j.size() != kHorizon) {
    throw DatasetError("trajectory: expected exactly " + std::to_string(kHorizon) + " poses");
  }
  Trajectory t;
  for (std::size_t i = 0; i < kHorizon; ++i) t.poses[i] = pose_from_json(j[i]);
  return t;
}

json to_json(const Scene& s) {
  json agents = json::array();
  for (const auto& a : s.agents) {
    agents.push_back({{"center", vec(a.center)},
                      {"heading", a.heading},
                      {"half_extents", json::array({a.half_extents.length, a.half_extents.width})},
                      {"velocity", vec(a.velocity)}});
  }
  json poly = json::array(), line = json::array();
  for (const auto& p : s.drivable_area) poly.push_back(vec(p));
  for (const auto& p : s.centerline) line.push_back(vec(p));
  return {{"kind", to_string(s.kind)},
          {"drivable_area", poly},
          {"centerline", line},
          {"ego",
           {{"velocity", vec(s.ego.velocity)},
            {"acceleration", vec(s.ego.acceleration)},
            {"heading", s.ego.heading},
            {"half_extents", json::array({s.ego.half_extents.length, s.ego.half_extents.width})}}},
          {"agents", agents}};
}

Scene scene_from_json(const json& j) {
  Scene s;
  try {
    s.kind = kind_from_string(field(j, "kind").get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw DatasetError(e.what());
  }
  s.drivable_area = points_from(field(j, "drivable_area"), "drivable_area");
  if (s.drivable_area.size() < 3) throw DatasetError("drivable_area needs at least 3 vertices");
  s.centerline = points_from(field(j, "centerline"), "centerline");
  if (s.centerline.size() < 2) throw DatasetError("centerline needs at least 2 points");
  const json& ego = field(j, "ego");
  s.ego.velocity = vec_from(field(ego, "velocity"), "ego.velocity");
  s.ego.acceleration = vec_from(field(ego, "acceleration"), "ego.acceleration");
  s.ego.heading = field(ego, "heading").get<double>();
  s.ego.half_extents = extents_from(field(ego, "half_extents"));
  for (const auto& a : field(j, "agents")) {
    AgentState st;
    st.center = vec_from(field(a, "center"), "agent.center");
    st.heading = field(a, "heading").get<double>();
    st.half_extents = extents_from(field(a, "half_extents"));
    st.velocity = vec_from(field(a, "velocity"), "agent.velocity");
    s.agents.push_back(st);
  }
  return s;
}

json to_json(const Sample& s) {
  return {{"scene", to_json(s.scene)}, {"tau_gt", to_json(s.tau_gt)}, {"goal_gt", to_json(s.goal_gt)}};
}

Sample sample_from_json(const json& j) {
  Sample s;
  s.scene = scene_from_json(field(j, "scene"));
  s.tau_gt = trajectory_from_json(field(j, "tau_gt"));
  s.goal_gt = pose_from_json(field(j, "goal_gt"));
  if (!(s.goal_gt == s.tau_gt.back())) throw DatasetError("goal_gt differs from the last pose of tau_gt");
  return s;
}

json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t offset = e.byte == 0 ? 0 : e.byte - 1;
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw DatasetError(source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                           ": parse error at byte " + std::to_string(offset) + ": " + e.what(),
                       line, column, offset);
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str(), path.string());
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot open " + path.string() + " for writing");
  out << j.dump(1) << '\n';
  if (!out) throw DatasetError("failed writing " + path.string());
}

json dataset_to_json(const Dataset& d) {
  json samples = json::array();
  for (const auto& s : d.samples) samples.push_back(to_json(s));
  return {{"format", "goalflow-dataset"}, {"version", kDatasetVersion}, {"seed", d.seed}, {"samples", samples}};
}

Dataset dataset_from_json(const json& j) {
  try {
    const int version = field(j, "version").get<int>();
    if (version != kDatasetVersion) {
      throw DatasetError("unsupported dataset version " + std::to_string(version));
    }
    Dataset d;
    if (auto it = j.find("seed"); it != j.end()) d.seed = it->get<std::uint64_t>();
    const json& samples = field(j, "samples");
    if (!samples.is_array()) throw DatasetError("'samples' must be an array");
    std::size_t index = 0;
    for (const auto& s : samples) {
      try {
        d.samples.push_back(sample_from_json(s));
      } catch (const DatasetError& e) {
        throw DatasetError("sample " + std::to_string(index) + ": " + e.what());
      }
      ++index;
    }
    return d;
  } catch (const json::exception& e) {
    throw DatasetError(std::string("dataset schema error: ") + e.what());
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  write_json_file(path, dataset_to_json(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_json(read_json_file(path));
}

}  // namespace goalflow::scenario
