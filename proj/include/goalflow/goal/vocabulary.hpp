#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "goalflow/scenario/types.hpp"

namespace goalflow::goal {

using scenario::GoalPoint;

inline constexpr int kVocabularyVersion = 1;

struct KMeansOptions {
  std::size_t max_iterations = 50;
  double relative_tolerance = 1e-6;
  /// Meters per unit of (cos, sin) heading component.
  double heading_scale = 1.0;
};

/// Clustered endpoint candidates.
struct GoalVocabulary {
  std::vector<GoalPoint> points;
  std::uint64_t seed = 0;
  std::size_t source_count = 0;
  /// Inertia after every Lloyd assignment step.
  std::vector<double> inertia_history;

  std::size_t size() const { return points.size(); }
  /// Stable 64-bit fingerprint of the points, as 16 hex digits.
  std::string hash() const;
};

/// k-means over (x, y, s*cos, s*sin) with k-means++ seeding and Lloyd
/// iterations. Throws std::invalid_argument when there are fewer distinct
/// endpoints than `count` or count < 2.
GoalVocabulary build_vocabulary(const std::vector<GoalPoint>& endpoints, std::size_t count,
                                std::uint64_t seed, const KMeansOptions& options = {});

/// Sum of squared distances to the nearest center in the clustering space.
double kmeans_inertia(const std::vector<GoalPoint>& endpoints, const std::vector<GoalPoint>& centers,
                      double heading_scale = 1.0);

nlohmann::json vocabulary_to_json(const GoalVocabulary& vocab);
GoalVocabulary vocabulary_from_json(const nlohmann::json& j);
void save_vocabulary(const std::filesystem::path& path, const GoalVocabulary& vocab);
GoalVocabulary load_vocabulary(const std::filesystem::path& path);

}  // namespace goalflow::goal
