#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "../support/gradcheck.hpp"
#include "goalflow/encoder/scene_encoder.hpp"
#include "goalflow/scenario/generator.hpp"

using namespace goalflow;
using namespace goalflow::encoder;
using goalflow::testing::grad_check;
using nn::ParamStore;

namespace {

struct Fixture {
  ParamStore store;
  SceneEncoderConfig config;
  SceneEncoder enc;

  explicit Fixture(std::size_t dim = 16, std::size_t heads = 2) {
    config.dim = dim;
    config.heads = heads;
    Rng rng(42);
    enc = SceneEncoder(store, "encoder", config, rng);
  }
};

scenario::Scene scene_with_agents(std::size_t n_agents) {
  for (std::uint64_t i = 0;; ++i) {
    auto s = scenario::generate_sample(8, i, {}).scene;
    if (s.agents.size() == n_agents) return s;
  }
}

std::vector<double> row(const Tensor& t, std::size_t r) {
  return {t.data().begin() + r * t.cols(), t.data().begin() + (r + 1) * t.cols()};
}

// Plain-loop x W + b.
std::vector<double> affine(const std::vector<double>& x, const Tensor& w, const Tensor& b) {
  std::vector<double> out(w.cols());
  for (std::size_t j = 0; j < w.cols(); ++j) {
    double s = b[j];
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w.at(i, j);
    out[j] = s;
  }
  return out;
}

}  // namespace

TEST_CASE("resampling keeps endpoints and spacing") {
  const scenario::Polyline line{{0, 0}, {10, 0}, {10, 10}};
  const auto pts = resample_open(line, 5);
  REQUIRE(pts.size() == 5);
  CHECK(pts[0] == scenario::Vec2{0, 0});
  CHECK(pts[2].x == doctest::Approx(10));
  CHECK(pts[2].y == doctest::Approx(0));
  CHECK(pts[4].x == doctest::Approx(10));
  CHECK(pts[4].y == doctest::Approx(10));

  const scenario::Polygon square{{0, 0}, {4, 0}, {4, 4}, {0, 4}};
  const auto sq = resample_closed(square, 8);
  REQUIRE(sq.size() == 8);
  CHECK(sq[1].x == doctest::Approx(2));
  CHECK(sq[3].y == doctest::Approx(2));
  CHECK(sq[7].x == doctest::Approx(0));
  CHECK(sq[7].y == doctest::Approx(2));
}

TEST_CASE("encode_scene is deterministic with a fixed token shape") {
  Fixture f;
  const auto scene = scene_with_agents(2);
  const Var a = f.enc.encode_scene(scene);
  const Var b = f.enc.encode_scene(scene);
  CHECK(a.value() == b.value());
  CHECK(a.shape() == nn::Shape{f.config.token_count(), f.config.dim});
  CHECK(a.value().all_finite());
}

TEST_CASE("scene without agents yields padding embeddings in every agent slot") {
  Fixture f;
  const Tensor tokens = f.enc.encode_scene(scene_with_agents(0)).value();
  const std::size_t first = f.config.polygon_points + f.config.centerline_points;
  const auto pad = f.enc.agent_padding().value().storage();
  for (std::size_t i = 0; i < f.config.max_agents; ++i) CHECK(row(tokens, first + i) == pad);
}

TEST_CASE("moving agents changes only agent tokens") {
  Fixture f;
  auto scene = scene_with_agents(3);
  const Tensor before = f.enc.encode_scene(scene).value();
  for (auto& a : scene.agents) a.center.x += 1.0;
  const Tensor after = f.enc.encode_scene(scene).value();
  const std::size_t first = f.config.polygon_points + f.config.centerline_points;
  for (std::size_t r = 0; r < first; ++r) CHECK(row(before, r) == row(after, r));
  for (std::size_t i = 0; i < 3; ++i) CHECK(row(before, first + i) != row(after, first + i));
  for (std::size_t i = 3; i < f.config.max_agents; ++i) CHECK(row(before, first + i) == row(after, first + i));
}

TEST_CASE("permuting agents permutes agent tokens") {
  Fixture f;
  auto scene = scene_with_agents(3);
  const Tensor before = f.enc.encode_scene(scene).value();
  std::swap(scene.agents[0], scene.agents[2]);
  const Tensor after = f.enc.encode_scene(scene).value();
  const std::size_t first = f.config.polygon_points + f.config.centerline_points;
  CHECK(row(before, first + 0) == row(after, first + 2));
  CHECK(row(before, first + 2) == row(after, first + 0));
  CHECK(row(before, first + 1) == row(after, first + 1));
}

TEST_CASE("batched encoding equals per-scene encoding") {
  Fixture f;
  const auto s1 = scene_with_agents(1);
  const auto s2 = scene_with_agents(4);
  const Tensor both = f.enc.encode_scenes({&s1, &s2}).value();
  const Tensor one = f.enc.encode_scene(s1).value();
  const Tensor two = f.enc.encode_scene(s2).value();
  const std::size_t T = f.config.token_count();
  for (std::size_t r = 0; r < T; ++r) {
    CHECK(row(both, r) == row(one, r));
    CHECK(row(both, T + r) == row(two, r));
  }
}

TEST_CASE("encode_ego") {
  Fixture f;
  scenario::EgoStatus still;
  scenario::EgoStatus fast;
  fast.velocity = {10, 0};
  const Tensor a = f.enc.encode_ego(still).value();
  CHECK(a == f.enc.encode_ego(still).value());
  CHECK(a.shape() == nn::Shape{1, f.config.dim});
  const Tensor b = f.enc.encode_ego(fast).value();
  double na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) na += a[i] * a[i], nb += b[i] * b[i];
  CHECK(std::abs(std::sqrt(na) - std::sqrt(nb)) > 1e-6);
}

TEST_CASE("ego statistics fit and serialize") {
  std::vector<scenario::EgoStatus> egos(2);
  egos[0].velocity = {2, 0};
  egos[1].velocity = {6, 0};
  egos[0].acceleration = {1, 0};
  egos[1].acceleration = {-1, 0};
  const EgoStats s = EgoStats::fit(egos);
  CHECK(s.mean[0] == doctest::Approx(4));
  CHECK(s.stddev[0] == doctest::Approx(2));
  CHECK(s.mean[2] == doctest::Approx(0));
  CHECK(s.stddev[2] == doctest::Approx(1));
  CHECK(s.stddev[1] > 0);
  CHECK(EgoStats::from_json(s.to_json()) == s);
  const Tensor feat = ego_features({&egos[0]}, s);
  CHECK(feat.at(0, 0) == doctest::Approx(-1));
}

TEST_CASE("env_condition over a single token is the projected value") {
  Fixture f;
  Rng rng(3);
  std::normal_distribution<double> n(0, 1);
  Tensor tok({1, f.config.dim}), ego({1, f.config.dim});
  for (auto& v : tok.storage()) v = n(rng);
  for (auto& v : ego.storage()) v = n(rng);
  const Tensor out = f.enc.env_condition(Var(tok), Var(ego), 1).value();
  std::vector<double> kv(f.config.dim);
  for (std::size_t i = 0; i < kv.size(); ++i) kv[i] = tok[i] + ego[i];
  const auto& attn = f.enc.env_attention();
  const auto expected = affine(affine(kv, attn.value_proj().weight().value(), attn.value_proj().bias().value()),
                               attn.out_proj().weight().value(), attn.out_proj().bias().value());
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(out[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("env_condition output shape does not depend on token count") {
  Fixture f;
  Tensor ego({2, f.config.dim}, 0.1);
  for (std::size_t T : {1u, 5u, 40u}) {
    const Var out = f.enc.env_condition(Var(Tensor({2 * T, f.config.dim}, 0.3)), Var(ego), 2);
    CHECK(out.shape() == nn::Shape{2, f.config.dim});
  }
  CHECK_THROWS_AS(f.enc.env_condition(Var(Tensor({4, f.config.dim + 1})), Var(ego), 2), std::invalid_argument);
  CHECK_THROWS_AS(f.enc.env_condition(Var(Tensor({4, f.config.dim})), Var(Tensor({2, 3})), 2),
                  std::invalid_argument);
}

TEST_CASE("env_condition matches a brute-force attention oracle on four tokens") {
  Fixture f(8, 2);
  const std::size_t d = 8, H = 2, dh = 4, T = 4;
  Rng rng(9);
  std::normal_distribution<double> n(0, 1);
  Tensor tok({T, d}), ego({1, d});
  for (auto& v : tok.storage()) v = n(rng);
  for (auto& v : ego.storage()) v = n(rng);
  const Tensor out = f.enc.env_condition(Var(tok), Var(ego), 1).value();

  const auto& attn = f.enc.env_attention();
  const auto q = affine(f.enc.env_query().value().storage(), attn.query_proj().weight().value(),
                        attn.query_proj().bias().value());
  std::vector<std::vector<double>> k, v;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> kv(d);
    for (std::size_t i = 0; i < d; ++i) kv[i] = tok.at(t, i) + ego[i];
    k.push_back(affine(kv, attn.key_proj().weight().value(), attn.key_proj().bias().value()));
    v.push_back(affine(kv, attn.value_proj().weight().value(), attn.value_proj().bias().value()));
  }
  std::vector<double> concat(d, 0.0);
  for (std::size_t h = 0; h < H; ++h) {
    std::vector<double> logits(T);
    for (std::size_t t = 0; t < T; ++t) {
      double s = 0;
      for (std::size_t i = 0; i < dh; ++i) s += q[h * dh + i] * k[t][h * dh + i];
      logits[t] = s / std::sqrt(static_cast<double>(dh));
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    for (auto& l : logits) z += (l = std::exp(l - mx));
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t i = 0; i < dh; ++i) concat[h * dh + i] += logits[t] / z * v[t][h * dh + i];
  }
  const auto expected = affine(concat, attn.out_proj().weight().value(), attn.out_proj().bias().value());
  for (std::size_t i = 0; i < d; ++i) CHECK(std::abs(out[i] - expected[i]) < 1e-5);
}

TEST_CASE("gradients through the scene encoder and env_condition match finite differences") {
  Fixture f(8, 2);
  const auto scene = scene_with_agents(2);
  std::vector<Var> inputs;
  for (const auto& [name, p] : f.store) inputs.push_back(p);
  const auto r = grad_check(
      [&] {
        const Var tokens = f.enc.encode_scene(scene);
        const Var ego = f.enc.encode_ego(scene.ego);
        const Var env = f.enc.env_condition(tokens, ego, 1);
        return nn::sum(nn::mul(env, env));
      },
      inputs, 1e-5, 8);
  CHECK(r.checked > 100);
  CHECK(r.max_rel_error < 1e-3);
}
