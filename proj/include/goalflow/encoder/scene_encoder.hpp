#pragma once

#include <array>
#include <vector>

#include <json.hpp>

#include "goalflow/nn/layers.hpp"
#include "goalflow/scenario/types.hpp"

namespace goalflow::encoder {

using nn::Scalar;
using nn::Tensor;
using nn::Var;

struct SceneEncoderConfig {
  std::size_t dim = 128;
  std::size_t heads = 4;
  std::size_t polygon_points = 16;
  std::size_t centerline_points = 16;
  std::size_t max_agents = 8;

  std::size_t token_count() const { return polygon_points + centerline_points + max_agents; }
};

/// Per-channel z-score statistics of (vx, vy, ax, ay).
struct EgoStats {
  std::array<Scalar, 4> mean{0, 0, 0, 0};
  std::array<Scalar, 4> stddev{1, 1, 1, 1};

  static EgoStats fit(const std::vector<scenario::EgoStatus>& egos);
  nlohmann::json to_json() const;
  static EgoStats from_json(const nlohmann::json& j);
  friend bool operator==(const EgoStats&, const EgoStats&) = default;
};

/// Points at equal arc-length spacing along a closed polygon, starting at vertex 0.
std::vector<scenario::Vec2> resample_closed(const scenario::Polygon& poly, std::size_t count);
/// Points at equal arc-length spacing along an open polyline, endpoints included.
std::vector<scenario::Vec2> resample_open(const scenario::Polyline& line, std::size_t count);

/// Raw per-element features of a batch of scenes, before any learned layer.
struct SceneFeatures {
  Tensor polygon;       // [B*P, 4]   x, y, tangent cos, tangent sin
  Tensor centerline;    // [B*C, 4]
  Tensor agents;        // [B*A, 9]   x, y, cos, sin, length, width, vx, vy, 1
  std::vector<bool> agent_valid;  // B*A
  std::size_t batch = 0;
};

SceneFeatures scene_features(const std::vector<const scenario::Scene*>& scenes,
                             const SceneEncoderConfig& config);
/// [B, 6]: z-scored velocity and acceleration, cos and sin of heading.
Tensor ego_features(const std::vector<const scenario::EgoStatus*>& egos, const EgoStats& stats);

/// Token-set scene encoding (stands in for a BEV feature map), ego feature
/// and the learnable-query attention that fuses them into one condition vector.
///
/// Tokens for one scene are ordered polygon, centerline, agents. Each token is
/// a per-element embedding plus a learned type embedding; padded agent slots
/// hold the learned padding embedding. Tokens do not mix across elements.
class SceneEncoder {
 public:
  SceneEncoder() = default;
  SceneEncoder(nn::ParamStore& store, const std::string& name, const SceneEncoderConfig& config,
               Rng& rng);

  const SceneEncoderConfig& config() const { return config_; }
  const EgoStats& ego_stats() const { return stats_; }
  void set_ego_stats(const EgoStats& stats) { stats_ = stats; }

  /// [B*n_tok, d]
  Var encode_scenes(const std::vector<const scenario::Scene*>& scenes) const;
  Var encode_features(const SceneFeatures& features) const;
  /// [B, d]
  Var encode_egos(const std::vector<const scenario::EgoStatus*>& egos) const;
  /// [B, d]: attention with the learnable query over tokens plus the
  /// broadcast ego feature. Throws std::invalid_argument on dim mismatch.
  Var env_condition(const Var& tokens, const Var& ego, std::size_t batch) const;

  Var encode_scene(const scenario::Scene& scene) const { return encode_scenes({&scene}); }
  Var encode_ego(const scenario::EgoStatus& ego) const { return encode_egos({&ego}); }

  const nn::MultiHeadAttention& env_attention() const { return env_attn_; }
  const Var& env_query() const { return env_query_; }
  const Var& agent_padding() const { return agent_pad_; }

 private:
  SceneEncoderConfig config_;
  EgoStats stats_;
  nn::Mlp polygon_mlp_, centerline_mlp_, agent_mlp_, ego_mlp_;
  Var polygon_type_, centerline_type_, agent_type_, agent_pad_;
  Var env_query_;
  nn::MultiHeadAttention env_attn_;
};

}  // namespace goalflow::encoder
