// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// when any criterion fails. Criteria 5-9 train a model in a scratch directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../support/gradcheck.hpp"
#include "goalflow/app/commands.hpp"
#include "goalflow/encoder/scene_encoder.hpp"
#include "goalflow/flow/rectified_flow.hpp"
#include "goalflow/flow/sampler.hpp"
#include "goalflow/flow/velocity_net.hpp"
#include "goalflow/goal/scorer.hpp"
#include "goalflow/goal/targets.hpp"
#include "goalflow/scenario/dataset_io.hpp"
#include "goalflow/scenario/generator.hpp"
#include "goalflow/scenario/geometry.hpp"
#include "goalflow/selector/metrics.hpp"

namespace fs = std::filesystem;
using namespace goalflow;
using goalflow::testing::grad_check;
using scenario::GoalPoint;
using scenario::Polygon;
using scenario::Trajectory;
using scenario::Vec2;
using nn::Tensor;
using nn::Var;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <typename... Args>
std::string str(const Args&... args) {
  std::ostringstream os;
  os << std::setprecision(6);
  (os << ... << args);
  return os.str();
}

// ---------------------------------------------------------------- oracles

// Winding number from summed signed edge angles.
int winding_number(const Vec2& p, const Polygon& poly) {
  double total = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    double d = std::atan2(b.y - p.y, b.x - p.x) - std::atan2(a.y - p.y, a.x - p.x);
    while (d > std::numbers::pi) d -= 2 * std::numbers::pi;
    while (d <= -std::numbers::pi) d += 2 * std::numbers::pi;
    total += d;
  }
  return static_cast<int>(std::lround(total / (2 * std::numbers::pi)));
}

bool corners_inside(const Trajectory& traj, const scenario::Scene& scene) {
  const auto& e = scene.ego.half_extents;
  for (const auto& p : traj.poses) {
    const double c = std::cos(p.heading), s = std::sin(p.heading);
    for (double lon : {-e.length, e.length})
      for (double lat : {-e.width, e.width})
        if (winding_number({p.x + c * lon - s * lat, p.y + s * lon + c * lat}, scene.drivable_area) == 0) return false;
  }
  return true;
}

// Arc-length coordinate of the closest point on the polyline.
double arc_coordinate(const Vec2& p, const scenario::Polyline& line) {
  double best_d = 1e300, best_s = 0, run = 0;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Vec2 a = line[i], b = line[i + 1];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    double u = len > 0 ? ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / (len * len) : 0;
    u = std::clamp(u, 0.0, 1.0);
    const double d = std::hypot(a.x + u * (b.x - a.x) - p.x, a.y + u * (b.y - a.y) - p.y);
    if (d < best_d) best_d = d, best_s = run + u * len;
    run += len;
  }
  return best_s;
}

std::vector<double> rescale(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  std::vector<double> out(v.size(), 0.5);
  if (*hi > *lo)
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / (*hi - *lo);
  return out;
}

nn::Tensor random_tensor(nn::Shape shape, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0, scale);
  nn::Tensor t(std::move(shape));
  for (auto& v : t.storage()) v = n(rng);
  return t;
}

Trajectory perturbed(const Trajectory& base, Rng& rng, double scale) {
  std::normal_distribution<double> n(0, scale);
  Trajectory t = base;
  const double dx = n(rng), dy = n(rng), dh = 0.1 * n(rng);
  for (std::size_t i = 0; i < scenario::kHorizon; ++i) {
    const double w = (i + 1) / static_cast<double>(scenario::kHorizon);
    t.poses[i].x += w * dx;
    t.poses[i].y += w * dy;
    t.poses[i].heading += w * dh;
  }
  return t;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ------------------------------------------------------- criteria 1 to 4

Outcome geometry_oracles() {
  const auto start = Clock::now();
  const auto data = scenario::generate_dataset(101, 120, {});
  std::vector<Polygon> polys{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 0}, {2, 3}, {4, 0}, {2, 1.2}}};
  for (std::size_t i = 0; i < 8; ++i) polys.push_back(data[i].scene.drivable_area);

  Rng rng(2024);
  std::size_t pip_cases = 0, pip_agree = 0;
  for (const auto& poly : polys) {
    double lo_x = 1e9, hi_x = -1e9, lo_y = 1e9, hi_y = -1e9;
    for (const auto& v : poly) {
      lo_x = std::min(lo_x, v.x), hi_x = std::max(hi_x, v.x);
      lo_y = std::min(lo_y, v.y), hi_y = std::max(hi_y, v.y);
    }
    std::uniform_real_distribution<double> ux(lo_x - 1, hi_x + 1), uy(lo_y - 1, hi_y + 1);
    for (int k = 0; k < 200; ++k) {
      const Vec2 p{ux(rng), uy(rng)};
      ++pip_cases;
      pip_agree += scenario::point_in_polygon(p, poly) == (winding_number(p, poly) != 0);
    }
  }

  std::size_t dac_cases = 0, dac_agree = 0, inside = 0;
  for (std::size_t k = 0; k < 1600; ++k) {
    const auto& s = data[k % data.size()];
    const auto traj = perturbed(s.tau_gt, rng, 2.5);
    const bool ok = selector::metric_dac(traj, s.scene) == 1.0;
    inside += ok;
    ++dac_cases;
    dac_agree += ok == corners_inside(traj, s.scene);
  }
  const double elapsed = seconds_since(start);
  const bool pass = pip_cases >= 1500 && dac_cases >= 1500 && pip_agree == pip_cases && dac_agree == dac_cases &&
                    elapsed < 10.0;
  return {pass, str("point_in_polygon ", pip_agree, "/", pip_cases, ", metric_dac ", dac_agree, "/", dac_cases,
                    " (", inside, " inside), ", elapsed, " s")};
}

Outcome flow_exactness() {
  const flow::TrajectoryNormalizer norm{{10, 1, 0.1}, {5, 2, 0.3}};
  Rng rng(77);
  double target_spread = 0, target_error = 0;
  for (int trial = 0; trial < 5; ++trial) {
    Trajectory target;
    std::normal_distribution<double> n(0, 3);
    for (std::size_t i = 0; i < scenario::kHorizon; ++i) target.poses[i] = {4.0 * (i + 1) + n(rng), n(rng), 0.1 * n(rng)};
    const Tensor tau = norm.normalize(target);
    const flow::VelocityField field = [&](const Tensor& x, nn::Scalar t) {
      Tensor v(x.shape());
      for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t k = 0; k < x.cols(); ++k) v.at(r, k) = (tau[k] - x.at(r, k)) / (1 - t);
      return v;
    };
    std::vector<std::vector<Trajectory>> runs;
    for (std::size_t steps : {1u, 5u, 20u}) {
      runs.push_back(flow::sample_with_field(field, norm, {8, steps, 0.1, 1.0, static_cast<std::uint64_t>(500 + trial)}));
    }
    for (std::size_t m = 0; m < 8; ++m)
      for (std::size_t i = 0; i < scenario::kHorizon; ++i) {
        const auto& a = runs[0][m].poses[i];
        for (const auto& run : runs) {
          const auto& b = run[m].poses[i];
          target_spread = std::max({target_spread, std::abs(a.x - b.x), std::abs(a.y - b.y),
                                    std::abs(a.heading - b.heading)});
          target_error = std::max({target_error, std::abs(b.x - target.poses[i].x), std::abs(b.y - target.poses[i].y)});
        }
      }
  }

  Tensor c({1, 24});
  for (std::size_t k = 0; k < 24; ++k) c[k] = 0.37 * static_cast<double>(k) - 4.1;
  const flow::VelocityField constant = [&](const Tensor& x, nn::Scalar) {
    Tensor v(x.shape());
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t k = 0; k < x.cols(); ++k) v.at(r, k) = c[k];
    return v;
  };
  double constant_error = 0;
  for (std::size_t steps : {1u, 2u, 5u, 10u, 20u, 50u})
    for (double shift : {1.0, 3.0}) {
      const Tensor x0 = flow::draw_noise(6, 0.3, steps);
      const Tensor out = flow::integrate(x0, flow::timestep_schedule(steps, shift), constant);
      for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t k = 0; k < 24; ++k) constant_error = std::max(constant_error, std::abs(out.at(r, k) - (x0.at(r, k) + c[k])));
    }
  // Equality up to the rounding of summing n_steps terms.
  const bool pass = target_spread <= 1e-4 && target_error <= 1e-4 && constant_error <= 1e-12;
  return {pass, str("point-target spread across steps ", target_spread, " m, error to target ", target_error,
                    " m; constant field max |x - (x0 + c)| ", constant_error)};
}

Outcome gradient_checks() {
  Rng rng(31);
  nn::ParamStore store;
  std::vector<std::pair<std::string, double>> results;
  auto params_of = [&](const std::string& prefix, std::vector<Var> extra) {
    for (const auto& [name, p] : store)
      if (name.rfind(prefix, 0) == 0) extra.push_back(p);
    return extra;
  };
  auto run = [&](const std::string& name, const std::function<Var()>& f, std::vector<Var> inputs,
                 double eps = 1e-5, std::size_t per_input = 12) {
    results.emplace_back(name, grad_check(f, std::move(inputs), eps, per_input).max_rel_error);
  };

  const Var x(random_tensor({6, 8}, rng), true);
  const Var ctx(random_tensor({10, 8}, rng), true);
  const Tensor w = random_tensor({6, 8}, rng);
  auto weighted = [&](const Var& y) { return nn::sum(nn::mul(y, Var(w))); };

  nn::Linear linear(store, "linear", 8, 8, rng);
  run("Linear", [&] { return weighted(linear(x)); }, params_of("linear.", {x}));
  nn::LayerNorm norm(store, "norm", 8);
  run("LayerNorm", [&] { return weighted(norm(nn::mul(x, x))); }, params_of("norm.", {x}));
  nn::Mlp mlp(store, "mlp", 8, 12, 8, rng);
  run("Mlp", [&] { return weighted(mlp(x)); }, params_of("mlp.", {x}));
  nn::MultiHeadAttention mha(store, "mha", 8, 2, rng);
  run("MultiHeadAttention", [&] { return weighted(mha(x, ctx, ctx, 2)); }, params_of("mha.", {x, ctx}));
  nn::TransformerBlock self_block(store, "self", 8, 2, rng);
  run("TransformerBlock self", [&] { return weighted(self_block(x, 2)); }, params_of("self.", {x}));
  nn::TransformerBlock cross_block(store, "cross", 8, 2, rng);
  run("TransformerBlock cross", [&] { return weighted(cross_block(x, ctx, 2)); }, params_of("cross.", {x, ctx}));

  const auto data = scenario::generate_dataset(55, 3, {});
  encoder::SceneEncoderConfig ec;
  ec.dim = 8;
  ec.heads = 2;
  encoder::SceneEncoder enc(store, "encoder", ec, rng);
  const std::vector<const scenario::Scene*> scenes{&data[0].scene, &data[1].scene};
  const std::vector<const scenario::EgoStatus*> egos{&data[0].scene.ego, &data[1].scene.ego};
  run("SceneEncoder + env condition",
      [&] {
        const Var env = enc.env_condition(enc.encode_scenes(scenes), enc.encode_egos(egos), 2);
        return nn::sum(nn::mul(env, env));
      },
      params_of("encoder.", {}), 1e-5, 6);

  const std::vector<GoalPoint> vocab{{5, 0, 0}, {10, 1, 0.1}, {15, -2, -0.2}, {8, 4, 0.5}, {20, 0, 0}, {12, -5, -0.6}};
  goal::GoalScorer scorer(store, "scorer", {8, 2, 1, 4}, vocab, rng);
  Tensor dis_t({2, vocab.size()}), dac_t({2, vocab.size()});
  for (std::size_t b = 0; b < 2; ++b) {
    const auto d = goal::target_distance_scores(vocab, data[b].goal_gt);
    const auto a = goal::target_dac_scores(vocab, data[b].scene.drivable_area, data[b].scene.ego.half_extents);
    for (std::size_t i = 0; i < vocab.size(); ++i) dis_t.at(b, i) = d[i], dac_t.at(b, i) = a[i];
  }
  run("L_goal",
      [&] {
        const auto o = scorer.forward(enc.encode_scenes(scenes), enc.encode_egos(egos), 2);
        return goal::goal_losses(o.dis, o.dac, dis_t, dac_t, 1.0, 0.5, 1e-6).total;
      },
      params_of("scorer.", params_of("encoder.", {})), 1e-5, 6);

  flow::VelocityNet net(store, "planner", {8, 2, 2, 4, 8}, rng);
  const Tensor goals = Tensor::from_rows({{10, 1, 0.1}, {20, -3, -0.2}});
  const Var x_t(random_tensor({2, 24}, rng), true);
  const Tensor v_target = random_tensor({2, 24}, rng);
  const std::vector<double> t{0.2, 0.7};
  run("L_planner",
      [&] {
        const Var env = enc.env_condition(enc.encode_scenes(scenes), enc.encode_egos(egos), 2);
        const auto cond = net.condition(env, goals, {true, false}, {true, true});
        return flow::flow_loss(net.velocity(cond, x_t, t), Var(v_target));
      },
      params_of("planner.", params_of("encoder.env", {x_t})), 1e-5, 6);

  double worst = 0;
  std::string worst_name, failing;
  for (const auto& [name, err] : results) {
    if (err > worst) worst = err, worst_name = name;
    if (!(err < 1e-3)) failing += (failing.empty() ? "" : ", ") + name;
  }
  return {failing.empty(), str(results.size(), " checks, max relative error ", worst, " (", worst_name, ")",
                               failing.empty() ? "" : "; failing: " + failing)};
}

Outcome score_arithmetic() {
  Rng rng(9);
  double dis_error = 0;
  std::uniform_real_distribution<double> pos(-40, 40), unit(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<GoalPoint> vocab(1 + trial % 64);
    for (auto& p : vocab) p = {pos(rng), pos(rng), unit(rng)};
    const GoalPoint g{pos(rng), pos(rng), 0};
    const auto s = goal::target_distance_scores(vocab, g);
    double z = 0;
    for (const auto& p : vocab) z += std::exp(-std::hypot(p.x - g.x, p.y - g.y));
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      const double direct = std::exp(-std::hypot(vocab[i].x - g.x, vocab[i].y - g.y)) / z;
      dis_error = std::max(dis_error, std::abs(s[i] - direct));
    }
  }
  // Constructed: two points at distance 0 and 1 from the goal.
  const auto two = goal::target_distance_scores({{3, 4, 0}, {3, 5, 0}}, {3, 4, 0.7});
  dis_error = std::max({dis_error, std::abs(two[0] - std::exp(0.0) / (1 + std::exp(-1.0))),
                        std::abs(two[1] - std::exp(-1.0) / (1 + std::exp(-1.0)))});

  double pdm_error = 0;
  struct Case {
    double nc, dac, ttc, ep, cf, ddc, expect;
  };
  for (const auto& c : std::vector<Case>{{1, 1, 1, 1, 1, 1, 1.0},
                                         {1, 1, 1, 0.5, 1, 1, 9.5 / 12},
                                         {1, 1, 1, 1, 0, 1, 7.0 / 12},
                                         {1, 1, 1, 1, 1, 0, 10.0 / 12},
                                         {0, 1, 1, 1, 1, 1, 0.0},
                                         {1, 0.5, 1, 1, 1, 1, 0.5}}) {
    pdm_error = std::max(pdm_error, std::abs(selector::pdm_score(c.nc, c.dac, c.ttc, c.ep, c.cf, c.ddc) - c.expect));
  }
  for (int trial = 0; trial < 1000; ++trial) {
    double s[6];
    for (double& v : s) v = unit(rng);
    const double direct = s[0] * s[1] * s[2] * (5 * s[3] + 5 * s[4] + 2 * s[5]) / 12;
    pdm_error = std::max(pdm_error, std::abs(selector::pdm_score(s[0], s[1], s[2], s[3], s[4], s[5]) - direct));
  }
  return {dis_error <= 1e-6 && pdm_error <= 1e-6,
          str("distance scores max error ", dis_error, ", pdm max error ", pdm_error)};
}

// ------------------------------------------------------ trained criteria

struct Workspace {
  fs::path dir;
  app::ConfigSources sources;
  fs::path train, eval, vocab, model_01, model_03;
  double setup_seconds = 0;
};

app::ConfigSources acceptance_sources() {
  app::ConfigSources s;
  s.overrides = {{"vocab_size", "128"}, {"dim", "64"},          {"layers", "3"},
                 {"scorer_layers", "2"}, {"goal_epochs", "15"}, {"planner_epochs", "120"},
                 {"lr", "0.001"},        {"w2", "1.0"}};
  return s;
}

Workspace prepare(std::ostream& log) {
  Workspace ws;
  ws.dir = fs::temp_directory_path() / "goalflow_acceptance";
  fs::remove_all(ws.dir);
  fs::create_directories(ws.dir);
  ws.sources = acceptance_sources();
  ws.train = ws.dir / "train.json";
  ws.eval = ws.dir / "eval.json";
  ws.vocab = ws.dir / "vocab.json";
  ws.model_01 = ws.dir / "sigma_0.1.ckpt";
  ws.model_03 = ws.dir / "sigma_0.3.ckpt";

  const auto start = Clock::now();
  app::cmd_gen_data(ws.sources, app::Split::Train, ws.train, log);
  app::cmd_gen_data(ws.sources, app::Split::Eval, ws.eval, log);
  app::cmd_build_vocab(ws.sources, ws.train, ws.vocab, log);
  app::cmd_train(ws.sources, {ws.train, ws.vocab, std::nullopt, std::nullopt, ws.model_01}, log);
  ws.setup_seconds = seconds_since(start);
  std::cout << "  trained sigma=0.1 model in " << std::fixed << std::setprecision(1) << ws.setup_seconds << " s"
            << std::defaultfloat << std::endl;

  auto sigma_03 = ws.sources;
  sigma_03.overrides["sigma"] = "0.3";
  const auto start_03 = Clock::now();
  app::cmd_train(sigma_03, {ws.train, std::nullopt, std::nullopt, ws.model_01, ws.model_03}, log);
  std::cout << "  trained sigma=0.3 planner in " << std::fixed << std::setprecision(1) << seconds_since(start_03)
            << " s" << std::defaultfloat << std::endl;
  return ws;
}

app::EvalReport evaluate(const Workspace& ws, app::Variant variant, std::ostream& log) {
  const fs::path out = ws.dir / ("eval_" + app::to_string(variant) + ".json");
  return app::cmd_eval(ws.sources, {ws.model_01, ws.eval, variant, out, std::nullopt}, log);
}

Outcome goal_guidance(const Workspace& ws, std::ostream& log) {
  const auto start = Clock::now();
  const auto base = evaluate(ws, app::Variant::Base, log).mean;
  const auto guided = evaluate(ws, app::Variant::GoalMean, log).mean;
  const auto oracle_mean = evaluate(ws, app::Variant::OracleMean, log).mean;
  const auto goalflow = evaluate(ws, app::Variant::GoalFlow, log).mean;
  const auto oracle = evaluate(ws, app::Variant::Oracle, log).mean;
  const double total = ws.setup_seconds + seconds_since(start);
  const std::size_t scenes = scenario::load_dataset(ws.eval).samples.size();
  const bool pass = scenes >= 200 && guided.pdm > base.pdm && guided.dac > base.dac && oracle_mean.pdm >= guided.pdm &&
                    oracle.pdm >= goalflow.pdm && total < 30 * 60;
  return {pass, str(scenes, " scenes; goal-mean PDM ", guided.pdm, " DAC ", guided.dac, " vs base PDM ", base.pdm,
                    " DAC ", base.dac, "; oracle-mean ", oracle_mean.pdm, " >= goal-mean; oracle ", oracle.pdm,
                    " >= goalflow ", goalflow.pdm, "; train+eval ", total, " s")};
}

Outcome steps_ablation(const Workspace& ws, std::ostream& log) {
  app::AblateArgs args;
  args.checkpoint = ws.model_01;
  args.dataset = ws.eval;
  args.axis = app::AblationAxis::Steps;
  args.values = {1, 5, 10, 20};
  args.out = ws.dir / "ablate_steps.csv";
  const auto rows = app::cmd_ablate(ws.sources, args, log);
  const auto& one = rows.front();
  const auto& twenty = rows.back();
  const double drop = (twenty.mean.pdm - one.mean.pdm) / twenty.mean.pdm;
  const double time_ratio = one.denoise_ms / twenty.denoise_ms;
  std::string table;
  for (const auto& r : rows) table += str(" ", r.value, ":", r.mean.pdm);
  return {drop <= 0.10 && time_ratio <= 0.25,
          str("PDM by steps", table, "; relative drop 20->1 ", drop, "; denoise ", one.denoise_ms, " ms vs ",
              twenty.denoise_ms, " ms (ratio ", time_ratio, ")")};
}

Outcome sigma_ablation(const Workspace& ws, std::ostream& log) {
  app::AblateArgs args;
  args.dataset = ws.eval;
  args.axis = app::AblationAxis::Sigma;
  args.values = {0.1, 0.3};
  args.checkpoints = {ws.model_01, ws.model_03};
  args.out = ws.dir / "ablate_sigma.csv";
  const auto rows = app::cmd_ablate(ws.sources, args, log);
  const auto& low = rows[0].mean;
  const auto& high = rows[1].mean;
  return {high.cf < low.cf && low.pdm >= high.pdm,
          str("CF ", low.cf, " (0.1) vs ", high.cf, " (0.3); PDM ", low.pdm, " (0.1) vs ", high.pdm, " (0.3)")};
}

Outcome selector_records(const Workspace& ws, std::ostream& log) {
  std::size_t records = 0, argmax_ok = 0, fallback_ok = 0, shadows = 0;
  for (double threshold : {2.0, 0.5}) {
    auto sources = ws.sources;
    sources.overrides["shadow_threshold"] = str(threshold);
    for (std::size_t index = 0; index < 30; ++index) {
      const fs::path out = ws.dir / str("infer_", threshold, "_", index, ".json");
      app::cmd_infer(sources, {ws.model_01, ws.eval, index, app::Variant::GoalFlow, out}, log);
      const auto j = scenario::read_json_file(out);
      ++records;

      const auto scene = scenario::scene_from_json(j.at("scene"));
      const auto set = flow::candidate_set_from_json(j.at("candidate_set"));
      const auto goal = scenario::pose_from_json(j.at("goal").at("point"));
      const double l1 = j.at("selection").at("lambda1"), l2 = j.at("selection").at("lambda2");
      std::vector<double> dis, pg;
      const double origin = arc_coordinate({0, 0}, scene.centerline);
      for (const auto& c : set.candidates) {
        const auto& end = c.poses.back();
        dis.push_back(std::hypot(end.x - goal.x, end.y - goal.y));
        pg.push_back(arc_coordinate({end.x, end.y}, scene.centerline) - origin);
      }
      const auto phi_dis = rescale(dis), phi_pg = rescale(pg);
      std::vector<double> f(dis.size());
      for (std::size_t m = 0; m < f.size(); ++m) f[m] = -l1 * phi_dis[m] + l2 * phi_pg[m];
      const std::size_t best = j.at("selection").at("best");
      const double top = *std::max_element(f.begin(), f.end());
      argmax_ok += best < f.size() && f[best] >= top - 1e-9;

      const auto main = scenario::trajectory_from_json(j.at("selection").at("trajectory"));
      const auto shadow = scenario::trajectory_from_json(j.at("shadow").at("trajectory"));
      const auto chosen = scenario::trajectory_from_json(j.at("chosen"));
      double dev = 0;
      for (std::size_t i = 0; i < scenario::kHorizon; ++i) {
        dev += std::hypot(main.poses[i].x - shadow.poses[i].x, main.poses[i].y - shadow.poses[i].y);
      }
      dev /= static_cast<double>(scenario::kHorizon);
      const bool used = j.at("shadow").at("used_shadow");
      const bool expect = dev > static_cast<double>(j.at("shadow").at("threshold"));
      shadows += used;
      fallback_ok += used == expect && scenario::to_json(main) == scenario::to_json(set.candidates[best]) &&
                     scenario::to_json(chosen) == scenario::to_json(used ? shadow : main);
    }
  }
  const bool pass = argmax_ok == records && fallback_ok == records && shadows > 0 && shadows < records;
  return {pass, str("argmax ", argmax_ok, "/", records, ", fallback rule ", fallback_ok, "/", records, " (",
                    shadows, " shadow)")};
}

Outcome determinism(const Workspace& ws, std::ostream& log) {
  std::size_t identical = 0, compared = 0;
  auto same = [&](const fs::path& a, const fs::path& b) {
    ++compared;
    const auto x = read_bytes(a), y = read_bytes(b);
    identical += !x.empty() && x == y;
  };
  for (std::size_t index : {0u, 7u, 42u}) {
    std::vector<fs::path> outs;
    for (int run = 0; run < 2; ++run) {
      outs.push_back(ws.dir / str("det_infer_", index, "_", run, ".json"));
      app::cmd_infer(ws.sources, {ws.model_01, ws.eval, index, app::Variant::GoalFlow, outs.back()}, log);
    }
    same(outs[0], outs[1]);
  }
  for (auto variant : {app::Variant::GoalFlow, app::Variant::Base}) {
    std::vector<fs::path> json, csv;
    for (int run = 0; run < 2; ++run) {
      json.push_back(ws.dir / str("det_eval_", app::to_string(variant), "_", run, ".json"));
      csv.push_back(ws.dir / str("det_eval_", app::to_string(variant), "_", run, ".csv"));
      app::cmd_eval(ws.sources, {ws.model_01, ws.eval, variant, json.back(), csv.back()}, log);
    }
    same(json[0], json[1]);
    same(csv[0], csv[1]);
  }
  return {identical == compared, str(identical, "/", compared, " output pairs byte-identical")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& criterion) {
    Outcome o;
    try {
      o = criterion();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail << std::endl;
  };

  report(1, "geometry oracle equivalence", geometry_oracles);
  report(2, "flow exactness", flow_exactness);
  report(3, "gradient correctness", gradient_checks);
  report(4, "score arithmetic", score_arithmetic);

  std::ostringstream log;
  std::optional<Workspace> ws;
  std::string setup_error;
  try {
    ws = prepare(log);
  } catch (const std::exception& e) {
    setup_error = e.what();
  }
  auto trained = [&](int id, const std::string& name, Outcome (*criterion)(const Workspace&, std::ostream&)) {
    report(id, name, [&]() -> Outcome {
      if (!ws) return {false, "training failed: " + setup_error};
      return criterion(*ws, log);
    });
  };
  trained(5, "goal guidance trend", goal_guidance);
  trained(6, "steps ablation trend", steps_ablation);
  trained(7, "sigma ablation trend", sigma_ablation);
  trained(8, "selector correctness on recorded candidates", selector_records);
  trained(9, "determinism of infer and eval", determinism);

  std::cout << (failures == 0 ? "all criteria passed" : str(failures, " criteria failed")) << std::endl;
  return failures == 0 ? 0 : 1;
}
