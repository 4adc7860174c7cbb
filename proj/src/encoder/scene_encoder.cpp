#include "goalflow/encoder/scene_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace goalflow::encoder {

using scenario::Vec2;

namespace {

constexpr Scalar kPositionScale = 20.0;
constexpr Scalar kSpeedScale = 10.0;
constexpr Scalar kExtentScale = 3.0;
constexpr std::size_t kElementFeatures = 4;
constexpr std::size_t kAgentFeatures = 9;
constexpr std::size_t kEgoFeatures = 6;

Var embedding(nn::ParamStore& store, const std::string& name, std::size_t dim, Rng& rng) {
  std::normal_distribution<Scalar> normal(0.0, 0.02);
  Tensor t({dim});
  for (auto& v : t.storage()) v = normal(rng);
  return store.create(name, std::move(t));
}

struct Sampled {
  Vec2 point;
  double heading;
};

/// Samples at arc lengths `positions` along the chain of `pts` (closed adds
/// the edge back to vertex 0).
std::vector<Sampled> sample_chain(const std::vector<Vec2>& pts, bool closed,
                                  const std::vector<double>& positions) {
  const std::size_t edges = closed ? pts.size() : pts.size() - 1;
  std::vector<Sampled> out;
  std::size_t e = 0;
  double start = 0;
  for (double s : positions) {
    for (;;) {
      const Vec2& a = pts[e];
      const Vec2& b = pts[(e + 1) % pts.size()];
      const double len = std::hypot(b.x - a.x, b.y - a.y);
      if (s <= start + len || e + 1 == edges) {
        const double u = len > 0 ? std::clamp((s - start) / len, 0.0, 1.0) : 0.0;
        out.push_back({{a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)}, std::atan2(b.y - a.y, b.x - a.x)});
        break;
      }
      start += len;
      ++e;
    }
  }
  return out;
}

double chain_length(const std::vector<Vec2>& pts, bool closed) {
  double total = 0;
  const std::size_t edges = closed ? pts.size() : pts.size() - 1;
  for (std::size_t i = 0; i < edges; ++i) {
    const Vec2& a = pts[i];
    const Vec2& b = pts[(i + 1) % pts.size()];
    total += std::hypot(b.x - a.x, b.y - a.y);
  }
  return total;
}

std::vector<Sampled> resample_closed_with_heading(const scenario::Polygon& poly, std::size_t count) {
  if (poly.size() < 3) throw std::invalid_argument("resample_closed: polygon needs at least 3 vertices");
  const double total = chain_length(poly, true);
  std::vector<double> pos(count);
  for (std::size_t i = 0; i < count; ++i) pos[i] = total * static_cast<double>(i) / static_cast<double>(count);
  return sample_chain(poly, true, pos);
}

std::vector<Sampled> resample_open_with_heading(const scenario::Polyline& line, std::size_t count) {
  if (line.size() < 2) throw std::invalid_argument("resample_open: polyline needs at least 2 points");
  const double total = chain_length(line, false);
  std::vector<double> pos(count);
  for (std::size_t i = 0; i < count; ++i) {
    pos[i] = count == 1 ? 0.0 : total * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return sample_chain(line, false, pos);
}

void write_element_rows(Tensor& out, std::size_t row0, const std::vector<Sampled>& samples) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.at(row0 + i, 0) = samples[i].point.x / kPositionScale;
    out.at(row0 + i, 1) = samples[i].point.y / kPositionScale;
    out.at(row0 + i, 2) = std::cos(samples[i].heading);
    out.at(row0 + i, 3) = std::sin(samples[i].heading);
  }
}

}  // namespace

std::vector<Vec2> resample_closed(const scenario::Polygon& poly, std::size_t count) {
  std::vector<Vec2> out;
  for (const auto& s : resample_closed_with_heading(poly, count)) out.push_back(s.point);
  return out;
}

std::vector<Vec2> resample_open(const scenario::Polyline& line, std::size_t count) {
  std::vector<Vec2> out;
  for (const auto& s : resample_open_with_heading(line, count)) out.push_back(s.point);
  return out;
}

EgoStats EgoStats::fit(const std::vector<scenario::EgoStatus>& egos) {
  EgoStats s;
  if (egos.empty()) return s;
  const double n = static_cast<double>(egos.size());
  auto channel = [](const scenario::EgoStatus& e, int c) {
    switch (c) {
      case 0: return e.velocity.x;
      case 1: return e.velocity.y;
      case 2: return e.acceleration.x;
      default: return e.acceleration.y;
    }
  };
  for (int c = 0; c < 4; ++c) {
    double mean = 0;
    for (const auto& e : egos) mean += channel(e, c);
    mean /= n;
    double var = 0;
    for (const auto& e : egos) var += (channel(e, c) - mean) * (channel(e, c) - mean);
    s.mean[c] = mean;
    // Constant channels keep unit scale rather than dividing by zero.
    s.stddev[c] = std::max(std::sqrt(var / n), 1e-3);
  }
  return s;
}

nlohmann::json EgoStats::to_json() const { return {{"mean", mean}, {"std", stddev}}; }

EgoStats EgoStats::from_json(const nlohmann::json& j) {
  EgoStats s;
  s.mean = j.at("mean").get<std::array<Scalar, 4>>();
  s.stddev = j.at("std").get<std::array<Scalar, 4>>();
  for (Scalar v : s.stddev) {
    if (!(v > 0)) throw std::invalid_argument("ego statistics need positive standard deviations");
  }
  return s;
}

SceneFeatures scene_features(const std::vector<const scenario::Scene*>& scenes,
                             const SceneEncoderConfig& config) {
  const std::size_t B = scenes.size();
  SceneFeatures f;
  f.batch = B;
  f.polygon = Tensor({B * config.polygon_points, kElementFeatures});
  f.centerline = Tensor({B * config.centerline_points, kElementFeatures});
  f.agents = Tensor({B * config.max_agents, kAgentFeatures});
  f.agent_valid.assign(B * config.max_agents, false);
  for (std::size_t b = 0; b < B; ++b) {
    const scenario::Scene& s = *scenes[b];
    write_element_rows(f.polygon, b * config.polygon_points,
                       resample_closed_with_heading(s.drivable_area, config.polygon_points));
    write_element_rows(f.centerline, b * config.centerline_points,
                       resample_open_with_heading(s.centerline, config.centerline_points));
    // Agents beyond max_agents are dropped in input order.
    const std::size_t n = std::min(s.agents.size(), config.max_agents);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a = s.agents[i];
      const std::size_t r = b * config.max_agents + i;
      const Scalar row[kAgentFeatures] = {a.center.x / kPositionScale,
                                          a.center.y / kPositionScale,
                                          std::cos(a.heading),
                                          std::sin(a.heading),
                                          a.half_extents.length / kExtentScale,
                                          a.half_extents.width / kExtentScale,
                                          a.velocity.x / kSpeedScale,
                                          a.velocity.y / kSpeedScale,
                                          1.0};
      for (std::size_t c = 0; c < kAgentFeatures; ++c) f.agents.at(r, c) = row[c];
      f.agent_valid[r] = true;
    }
  }
  return f;
}

Tensor ego_features(const std::vector<const scenario::EgoStatus*>& egos, const EgoStats& stats) {
  Tensor out({egos.size(), kEgoFeatures});
  for (std::size_t b = 0; b < egos.size(); ++b) {
    const auto& e = *egos[b];
    const Scalar raw[4] = {e.velocity.x, e.velocity.y, e.acceleration.x, e.acceleration.y};
    for (std::size_t c = 0; c < 4; ++c) out.at(b, c) = (raw[c] - stats.mean[c]) / stats.stddev[c];
    out.at(b, 4) = std::cos(e.heading);
    out.at(b, 5) = std::sin(e.heading);
  }
  return out;
}

SceneEncoder::SceneEncoder(nn::ParamStore& store, const std::string& name,
                           const SceneEncoderConfig& config, Rng& rng)
    : config_(config) {
  if (config.polygon_points < 3 || config.centerline_points < 2 || config.max_agents < 1) {
    throw std::invalid_argument("scene encoder needs >= 3 polygon points, >= 2 centerline points, >= 1 agent slot");
  }
  const std::size_t d = config.dim;
  polygon_mlp_ = nn::Mlp(store, name + ".polygon", kElementFeatures, d, d, rng);
  centerline_mlp_ = nn::Mlp(store, name + ".centerline", kElementFeatures, d, d, rng);
  agent_mlp_ = nn::Mlp(store, name + ".agent", kAgentFeatures, d, d, rng);
  ego_mlp_ = nn::Mlp(store, name + ".ego", kEgoFeatures, d, d, rng);
  polygon_type_ = embedding(store, name + ".type.polygon", d, rng);
  centerline_type_ = embedding(store, name + ".type.centerline", d, rng);
  agent_type_ = embedding(store, name + ".type.agent", d, rng);
  agent_pad_ = embedding(store, name + ".type.agent_pad", d, rng);
  env_query_ = embedding(store, name + ".env.query", d, rng);
  env_attn_ = nn::MultiHeadAttention(store, name + ".env.attn", d, config.heads, rng);
}

Var SceneEncoder::encode_features(const SceneFeatures& f) const {
  const Var poly = nn::add_row(polygon_mlp_(Var(f.polygon)), polygon_type_);
  const Var line = nn::add_row(centerline_mlp_(Var(f.centerline)), centerline_type_);
  const Var agents = nn::masked_replace(nn::add_row(agent_mlp_(Var(f.agents)), agent_type_), agent_pad_,
                                        f.agent_valid);
  return nn::interleave_blocks({poly, line, agents},
                               {config_.polygon_points, config_.centerline_points, config_.max_agents},
                               f.batch);
}

Var SceneEncoder::encode_scenes(const std::vector<const scenario::Scene*>& scenes) const {
  return encode_features(scene_features(scenes, config_));
}

Var SceneEncoder::encode_egos(const std::vector<const scenario::EgoStatus*>& egos) const {
  return ego_mlp_(Var(ego_features(egos, stats_)));
}

Var SceneEncoder::env_condition(const Var& tokens, const Var& ego, std::size_t batch) const {
  if (tokens.cols() != config_.dim || ego.cols() != config_.dim) {
    throw std::invalid_argument("env_condition: feature dims " + std::to_string(tokens.cols()) + "/" +
                                std::to_string(ego.cols()) + " do not match model dim " +
                                std::to_string(config_.dim));
  }
  if (batch == 0 || ego.rows() != batch || tokens.rows() % batch != 0) {
    throw std::invalid_argument("env_condition: token/ego rows do not match batch " + std::to_string(batch));
  }
  const std::size_t per_sample = tokens.rows() / batch;
  const Var kv = nn::add(tokens, nn::repeat_rows(ego, per_sample));
  const Var query = nn::tile_rows(nn::reshape(env_query_, {1, config_.dim}), batch);
  return env_attn_(query, kv, kv, batch);
}

}  // namespace goalflow::encoder
