#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "goalflow/scenario/types.hpp"

namespace goalflow::scenario {

inline constexpr int kDatasetVersion = 1;

/// Malformed dataset text or schema violation. For syntax errors `line` and
/// `column` (1-based) and the byte offset locate the problem.
class DatasetError : public std::runtime_error {
 public:
  DatasetError(const std::string& what, std::size_t line = 0, std::size_t column = 0,
               std::size_t offset = 0)
      : std::runtime_error(what), line(line), column(column), offset(offset) {}
  std::size_t line, column, offset;
};

nlohmann::json to_json(const Scene& scene);
nlohmann::json to_json(const Trajectory& traj);
nlohmann::json to_json(const Pose& pose);
nlohmann::json to_json(const Sample& sample);
Scene scene_from_json(const nlohmann::json& j);
Trajectory trajectory_from_json(const nlohmann::json& j);
Pose pose_from_json(const nlohmann::json& j);
Sample sample_from_json(const nlohmann::json& j);

/// Parses text into JSON, converting syntax errors into DatasetError with
/// line/column information.
nlohmann::json parse_json_text(const std::string& text, const std::string& source);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

struct Dataset {
  std::uint64_t seed = 0;
  std::vector<Sample> samples;
};

/// Writes {"format", "version", "seed", "samples": [...]}; see docs/file_formats.md.
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
/// All-or-nothing: any error throws and returns no samples. Unknown fields are ignored.
Dataset load_dataset(const std::filesystem::path& path);
Dataset dataset_from_json(const nlohmann::json& j);
nlohmann::json dataset_to_json(const Dataset& dataset);

}  // namespace goalflow::scenario
