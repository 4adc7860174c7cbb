#include "goalflow/goal/vocabulary.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>

#include "goalflow/nn/random.hpp"
#include "goalflow/scenario/dataset_io.hpp"

namespace goalflow::goal {

namespace {

using Point4 = std::array<double, 4>;

Point4 embed(const GoalPoint& p, double s) {
  return {p.x, p.y, s * std::cos(p.heading), s * std::sin(p.heading)};
}

double sq_dist(const Point4& a, const Point4& b) {
  double d = 0;
  for (int i = 0; i < 4; ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

GoalPoint to_goal(const Point4& c) {
  return {c[0], c[1], std::atan2(c[3], c[2])};
}

/// Index of the nearest center; ties go to the lower index.
std::size_t nearest(const Point4& p, const std::vector<Point4>& centers, double& best) {
  best = std::numeric_limits<double>::infinity();
  std::size_t idx = 0;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const double d = sq_dist(p, centers[k]);
    if (d < best) {
      best = d;
      idx = k;
    }
  }
  return idx;
}

std::vector<Point4> kmeanspp(const std::vector<Point4>& pts, std::size_t k, Rng& rng) {
  std::vector<Point4> centers;
  centers.push_back(pts[std::uniform_int_distribution<std::size_t>(0, pts.size() - 1)(rng)]);
  std::vector<double> d2(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) d2[i] = sq_dist(pts[i], centers[0]);
  while (centers.size() < k) {
    std::discrete_distribution<std::size_t> pick(d2.begin(), d2.end());
    const Point4 c = pts[pick(rng)];
    centers.push_back(c);
    for (std::size_t i = 0; i < pts.size(); ++i) d2[i] = std::min(d2[i], sq_dist(pts[i], c));
  }
  return centers;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string GoalVocabulary::hash() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) pts.push_back(scenario::to_json(p));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(pts.dump())));
  return buf;
}

double kmeans_inertia(const std::vector<GoalPoint>& endpoints, const std::vector<GoalPoint>& centers,
                      double heading_scale) {
  std::vector<Point4> c;
  for (const auto& g : centers) c.push_back(embed(g, heading_scale));
  double total = 0;
  for (const auto& p : endpoints) {
    double d;
    nearest(embed(p, heading_scale), c, d);
    total += d;
  }
  return total;
}

GoalVocabulary build_vocabulary(const std::vector<GoalPoint>& endpoints, std::size_t count,
                                std::uint64_t seed, const KMeansOptions& options) {
  if (count < 2) throw std::invalid_argument("build_vocabulary: vocabulary size must be at least 2");
  std::vector<Point4> pts;
  pts.reserve(endpoints.size());
  for (const auto& e : endpoints) {
    if (!std::isfinite(e.x) || !std::isfinite(e.y) || !std::isfinite(e.heading)) {
      throw std::invalid_argument("build_vocabulary: non-finite endpoint");
    }
    pts.push_back(embed(e, options.heading_scale));
  }
  const std::set<Point4> distinct(pts.begin(), pts.end());
  if (distinct.size() < count) {
    throw std::invalid_argument("build_vocabulary: " + std::to_string(distinct.size()) +
                                " distinct endpoints for a vocabulary of " + std::to_string(count));
  }

  Rng rng(derive_seed(seed, 0x766f63));
  std::vector<Point4> centers = kmeanspp(pts, count, rng);
  std::vector<std::size_t> assign(pts.size());
  std::vector<double> dist(pts.size());
  GoalVocabulary vocab;
  vocab.seed = seed;
  vocab.source_count = endpoints.size();

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    double inertia = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      assign[i] = nearest(pts[i], centers, dist[i]);
      inertia += dist[i];
    }
    vocab.inertia_history.push_back(inertia);
    const std::size_t h = vocab.inertia_history.size();
    if (h >= 2) {
      const double prev = vocab.inertia_history[h - 2];
      if (prev <= 0 || (prev - inertia) / prev < options.relative_tolerance) break;
    }
    if (inertia == 0) break;

    std::vector<Point4> sums(count, Point4{0, 0, 0, 0});
    std::vector<std::size_t> sizes(count, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (int c = 0; c < 4; ++c) sums[assign[i]][c] += pts[i][c];
      ++sizes[assign[i]];
    }
    for (std::size_t k = 0; k < count; ++k) {
      if (sizes[k] == 0) {
        // Empty cluster: move it onto the currently worst-fit point.
        const auto far = std::max_element(dist.begin(), dist.end()) - dist.begin();
        centers[k] = pts[far];
        dist[far] = 0;
        continue;
      }
      for (int c = 0; c < 4; ++c) centers[k][c] = sums[k][c] / static_cast<double>(sizes[k]);
    }
  }
  for (const auto& c : centers) vocab.points.push_back(to_goal(c));
  return vocab;
}

nlohmann::json vocabulary_to_json(const GoalVocabulary& v) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : v.points) pts.push_back(scenario::to_json(p));
  return {{"format", "goalflow-vocabulary"},
          {"version", kVocabularyVersion},
          {"N", v.points.size()},
          {"seed", v.seed},
          {"hash", v.hash()},
          {"clustering",
           {{"method", "kmeans++/lloyd"}, {"source_count", v.source_count}, {"inertia", v.inertia_history}}},
          {"points", pts}};
}

GoalVocabulary vocabulary_from_json(const nlohmann::json& j) {
  using scenario::DatasetError;
  try {
    if (j.at("version").get<int>() != kVocabularyVersion) {
      throw DatasetError("unsupported vocabulary version " + j.at("version").dump());
    }
    GoalVocabulary v;
    v.seed = j.value("seed", std::uint64_t{0});
    for (const auto& p : j.at("points")) v.points.push_back(scenario::pose_from_json(p));
    if (v.points.size() < 2) throw DatasetError("vocabulary needs at least 2 points");
    if (j.at("N").get<std::size_t>() != v.points.size()) throw DatasetError("vocabulary N does not match points");
    if (auto c = j.find("clustering"); c != j.end()) {
      v.source_count = c->value("source_count", std::size_t{0});
      v.inertia_history = c->value("inertia", std::vector<double>{});
    }
    if (auto h = j.find("hash"); h != j.end() && h->get<std::string>() != v.hash()) {
      throw DatasetError("vocabulary hash mismatch: file says " + h->get<std::string>() + ", points give " + v.hash());
    }
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("vocabulary schema error: ") + e.what());
  }
}

void save_vocabulary(const std::filesystem::path& path, const GoalVocabulary& vocab) {
  scenario::write_json_file(path, vocabulary_to_json(vocab));
}

GoalVocabulary load_vocabulary(const std::filesystem::path& path) {
  return vocabulary_from_json(scenario::read_json_file(path));
}

}  // namespace goalflow::goal
