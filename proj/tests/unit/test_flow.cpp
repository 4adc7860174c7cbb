#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "../support/gradcheck.hpp"
#include "goalflow/flow/normalizer.hpp"
#include "goalflow/flow/rectified_flow.hpp"
#include "goalflow/flow/sampler.hpp"
#include "goalflow/flow/velocity_net.hpp"
#include "goalflow/nn/optim.hpp"

using namespace goalflow;
using namespace goalflow::flow;
using goalflow::testing::grad_check;
using scenario::Trajectory;

namespace {

Trajectory random_traj(Rng& rng) {
  std::normal_distribution<double> n(0, 3);
  Trajectory t;
  for (std::size_t i = 0; i < scenario::kHorizon; ++i) t.poses[i] = {4.0 * (i + 1) + n(rng), n(rng), 0.1 * n(rng)};
  return t;
}

TrajectoryNormalizer some_normalizer() { return {{10, 1, 0.1}, {5, 2, 0.3}}; }

Tensor random_tensor(nn::Shape shape, Rng& rng) {
  std::normal_distribution<double> n(0, 1);
  Tensor t(std::move(shape));
  for (auto& v : t.storage()) v = n(rng);
  return t;
}

}  // namespace

TEST_CASE("normalizer statistics, identity and errors") {
  Trajectory a, b;
  for (std::size_t i = 0; i < 8; ++i) {
    a.poses[i] = {1.0, 2.0, 0.0};
    b.poses[i] = {3.0, -2.0, 0.5};
  }
  const auto h = TrajectoryNormalizer::fit({a, b});
  CHECK(h.mean()[0] == doctest::Approx(2));
  CHECK(h.mean()[1] == doctest::Approx(0));
  CHECK(h.mean()[2] == doctest::Approx(0.25));
  CHECK(h.stddev()[0] == doctest::Approx(1));
  CHECK(h.stddev()[1] == doctest::Approx(2));
  CHECK(h.stddev()[2] == doctest::Approx(0.25));

  Trajectory mean;
  for (auto& p : mean.poses) p = {2.0, 0.0, 0.25};
  const Tensor centered = h.normalize(mean);
  for (double v : centered.storage()) CHECK(v == doctest::Approx(0).epsilon(1e-15));

  Rng rng(1);
  const auto n = some_normalizer();
  for (int i = 0; i < 20; ++i) {
    const auto t = random_traj(rng);
    const auto back = n.denormalize(n.normalize(t).data());
    for (std::size_t k = 0; k < 8; ++k) {
      CHECK(std::abs(back.poses[k].x - t.poses[k].x) < 1e-6);
      CHECK(std::abs(back.poses[k].y - t.poses[k].y) < 1e-6);
      CHECK(std::abs(back.poses[k].heading - t.poses[k].heading) < 1e-6);
    }
  }
  CHECK(TrajectoryNormalizer::from_json(n.to_json()) == n);
  const TrajectoryNormalizer empty;
  CHECK_THROWS_AS(empty.normalize(a), std::logic_error);
  CHECK_THROWS_AS(TrajectoryNormalizer::from_json(nlohmann::json::object()), std::invalid_argument);
}

TEST_CASE("training pairs follow the straight path") {
  Rng rng(2);
  const Tensor target = random_tensor({8, 3}, rng);
  const Tensor x0 = random_tensor({8, 3}, rng);
  CHECK(make_training_pair(target, x0, 0.0).x_t == x0);
  CHECK(make_training_pair(target, x0, 1.0).x_t == target);
  double t_sum = 0, sq = 0;
  const int draws = 2000;
  for (int i = 0; i < draws; ++i) {
    const auto p = sample_training_pair(target, 0.1, rng);
    CHECK(p.t >= 0);
    CHECK(p.t <= 1);
    t_sum += p.t;
    for (std::size_t k = 0; k < 24; ++k) {
      CHECK(std::abs(p.x_t[k] + (1 - p.t) * p.v_t[k] - target[k]) < 1e-6);
      CHECK(p.v_t[k] == target[k] - p.x0[k]);
      sq += p.x0[k] * p.x0[k];
    }
  }
  CHECK(t_sum / draws == doctest::Approx(0.5).epsilon(0.05));
  CHECK(std::sqrt(sq / (draws * 24)) == doctest::Approx(0.1).epsilon(0.03));
  CHECK_THROWS_AS(sample_training_pair(target, 0.0, rng), std::invalid_argument);
}

TEST_CASE("flow loss") {
  const Var v(Tensor({2, 24}, 0.3));
  CHECK(flow_loss(v, v).item() == 0);
  CHECK(flow_loss(Var(Tensor({2, 24}, 0.8)), v).item() == doctest::Approx(0.5));
  const Var p(Tensor({2, 24}, 0.3), true);
  const Var l = flow_loss(p, v);
  nn::backward(l);
  CHECK(std::isfinite(l.item()));
  CHECK(p.grad().all_finite());
  for (double g : p.grad().storage()) CHECK(g == 0);
}

TEST_CASE("condition masking") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto m = condition_mask(rng, 0.0);
    CHECK(m.keep_env);
    CHECK(m.keep_goal);
  }
  CHECK_THROWS_AS(condition_mask(rng, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(condition_mask(rng, -0.1), std::invalid_argument);
  int goal_masked = 0, env_masked = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto m = condition_mask(rng, 0.1);
    goal_masked += !m.keep_goal;
    env_masked += !m.keep_env;
  }
  CHECK(goal_masked >= 800);
  CHECK(goal_masked <= 1200);
  CHECK(env_masked >= 800);
  CHECK(env_masked <= 1200);
}

TEST_CASE("timestep schedules") {
  const auto u = timestep_schedule(4, 1.0);
  REQUIRE(u.t.size() == 5);
  for (std::size_t i = 0; i <= 4; ++i) CHECK(u.t[i] == doctest::Approx(i / 4.0));
  for (double shift : {0.3, 1.0, 2.0, 3.0}) {
    for (std::size_t n : {1u, 3u, 7u, 20u}) {
      const auto s = timestep_schedule(n, shift);
      CHECK(s.t.front() == 0.0);
      CHECK(s.t.back() == 1.0);
      double total = 0;
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(s.t[i + 1] > s.t[i]);
        total += s.dt[i];
      }
      CHECK(std::abs(total - 1) < 1e-9);
    }
  }
  CHECK_THROWS_AS(timestep_schedule(0), std::invalid_argument);
}

TEST_CASE("Euler sampling with a constant field telescopes") {
  const auto n = some_normalizer();
  Tensor c({1, 24});
  for (std::size_t k = 0; k < 24; ++k) c[k] = 0.1 * static_cast<double>(k) - 1;
  const VelocityField field = [&](const Tensor& x, Scalar) {
    Tensor v(x.shape());
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t k = 0; k < 24; ++k) v.at(r, k) = c[k];
    return v;
  };
  for (std::size_t steps : {1u, 2u, 5u, 20u}) {
    for (double shift : {1.0, 3.0}) {
      SamplingOptions o{4, steps, 0.2, shift, 9};
      const auto out = sample_with_field(field, n, o);
      const Tensor x0 = draw_noise(4, 0.2, 9);
      for (std::size_t m = 0; m < 4; ++m) {
        Tensor expect({24});
        for (std::size_t k = 0; k < 24; ++k) expect[k] = x0.at(m, k) + c[k];
        const auto want = n.denormalize(expect.data());
        for (std::size_t i = 0; i < 8; ++i) {
          CHECK(std::abs(out[m].poses[i].x - want.poses[i].x) < 1e-9);
          CHECK(std::abs(out[m].poses[i].heading - want.poses[i].heading) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("Euler sampling with the point-target field reaches the target") {
  const auto n = some_normalizer();
  Rng rng(4);
  const Trajectory target = random_traj(rng);
  const Tensor tau = n.normalize(target);
  const VelocityField field = [&](const Tensor& x, Scalar t) {
    Tensor v(x.shape());
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t k = 0; k < 24; ++k) v.at(r, k) = (tau[k] - x.at(r, k)) / (1 - t);
    return v;
  };
  for (std::size_t steps : {1u, 5u, 20u}) {
    const auto out = sample_with_field(field, n, {3, steps, 0.1, 1.0, 5});
    for (const auto& traj : out)
      for (std::size_t i = 0; i < 8; ++i) {
        CHECK(std::abs(traj.poses[i].x - target.poses[i].x) < 1e-4);
        CHECK(std::abs(traj.poses[i].y - target.poses[i].y) < 1e-4);
      }
  }
}

TEST_CASE("noise draws are per-candidate streams") {
  const Tensor a = draw_noise(32, 0.1, 7);
  const Tensor b = draw_noise(4, 0.1, 7);
  for (std::size_t k = 0; k < 4 * 24; ++k) CHECK(a[k] == b[k]);
  std::set<std::vector<double>> rows;
  for (std::size_t m = 0; m < 32; ++m) rows.insert({a.data().begin() + m * 24, a.data().begin() + (m + 1) * 24});
  CHECK(rows.size() == 32);
}

TEST_CASE("velocity net shapes, determinism and sampling") {
  nn::ParamStore store;
  Rng rng(5);
  VelocityNet net(store, "planner", {16, 2, 2, 8, 16}, rng);
  const Tensor env = random_tensor({3, 16}, rng);
  const Tensor goals = Tensor::from_rows({{10, 1, 0.1}, {20, -3, -0.2}, {5, 0, 0}});
  const auto cond = net.condition(Var(env), goals, {true, true, false}, {true, false, true});
  const Tensor x = random_tensor({3, 24}, rng);
  const std::vector<double> t{0.1, 0.5, 0.9};
  const Tensor v = net.velocity(cond, Var(x), t).value();
  CHECK(v.shape() == nn::Shape{3, 24});
  CHECK(v == net.velocity(net.condition(Var(env), goals, {true, true, false}, {true, false, true}), Var(x), t).value());

  // Masked rows equal the null embeddings.
  for (std::size_t k = 0; k < 16; ++k) {
    CHECK(cond.goal.value().at(1, k) == net.null_goal().value()[k]);
    CHECK(cond.env.value().at(2, k) == net.null_env().value()[k]);
  }

  const auto n = some_normalizer();
  const Var env1(Tensor({1, 16}, 0.2));
  const auto s1 = sample_trajectories(net, n, env1, scenario::GoalPoint{10, 0, 0}, {32, 3, 0.1, 1.0, 1});
  const auto s2 = sample_trajectories(net, n, env1, scenario::GoalPoint{10, 0, 0}, {32, 3, 0.1, 1.0, 1});
  CHECK(s1 == s2);
  std::set<std::vector<double>> distinct;
  for (const auto& tr : s1) {
    std::vector<double> flat;
    for (const auto& p : tr.poses) flat.insert(flat.end(), {p.x, p.y, p.heading});
    distinct.insert(flat);
  }
  CHECK(distinct.size() == 32);
}

TEST_CASE("velocity net gradients match finite differences") {
  nn::ParamStore store;
  Rng rng(6);
  VelocityNet net(store, "planner", {8, 2, 2, 4, 8}, rng);
  const Var env(random_tensor({2, 8}, rng), true);
  const Tensor goals = Tensor::from_rows({{10, 1, 0.1}, {20, -3, -0.2}});
  const Var x(random_tensor({2, 24}, rng), true);
  const std::vector<double> t{0.2, 0.7};
  std::vector<Var> inputs{env, x};
  for (const auto& [name, p] : store) inputs.push_back(p);
  const auto r = grad_check(
      [&] {
        const Var v = net.velocity(net.condition(env, goals, {true, true}, {true, true}), x, t);
        return nn::sum(nn::mul(v, v));
      },
      inputs, 1e-5, 6);
  CHECK(r.checked > 100);
  CHECK(r.max_rel_error < 1e-3);

  Tensor target({2, 24});
  const auto r2 = grad_check(
      [&] { return flow_loss(net.velocity(net.condition(env, goals, {true, false}, {false, true}), x, t), Var(target)); },
      inputs, 1e-5, 6);
  CHECK(r2.max_rel_error < 1e-3);
}

TEST_CASE("masked goal sends no gradient to the goal encoder") {
  nn::ParamStore store;
  Rng rng(7);
  VelocityNet net(store, "planner", {8, 2, 1, 4, 8}, rng);
  const Tensor goals = Tensor::from_rows({{10, 1, 0.1}});
  const auto cond = net.condition(Var(random_tensor({1, 8}, rng)), goals, {true}, {false});
  nn::backward(nn::sum(net.velocity(cond, Var(random_tensor({1, 24}, rng)), std::vector<double>{0.3})));
  for (const char* name : {"planner.goal_proj.weight", "planner.goal_proj.bias"}) {
    const Var& p = store.at(name);
    bool zero = true;
    if (p.has_grad())
      for (double g : p.grad().storage()) zero = zero && g == 0;
    CHECK(zero);
  }
  CHECK(store.at("planner.null_goal").has_grad());
}

TEST_CASE("velocity net fits a single conditional target") {
  nn::ParamStore store;
  Rng rng(8);
  VelocityNet net(store, "planner", {32, 2, 2, 8, 16}, rng);
  const Tensor target = random_tensor({1, 24}, rng);
  const Tensor goals = Tensor::from_rows({{15, 0, 0}});
  const Var env(Tensor({1, 32}, 0.1));
  nn::Adam adam({2e-3});
  auto loss_at = [&](std::uint64_t seed, int pairs) {
    double total = 0;
    Rng r(seed);
    for (int i = 0; i < pairs; ++i) {
      const auto p = sample_training_pair(target, 0.1, r);
      const Var v = net.velocity(net.condition(env, goals, {true}, {true}), Var(p.x_t), std::vector<double>{p.t});
      total += flow_loss(v, Var(p.v_t)).item();
    }
    return total / pairs;
  };
  const double before = loss_at(99, 64);
  for (int step = 0; step < 300; ++step) {
    store.zero_grad();
    const auto p = sample_training_pair(target, 0.1, rng);
    const Var v = net.velocity(net.condition(env, goals, {true}, {true}), Var(p.x_t), std::vector<double>{p.t});
    nn::backward(flow_loss(v, Var(p.v_t)));
    adam.step(store);
  }
  const double after = loss_at(99, 64);
  CHECK(after < 0.5 * before);
}

TEST_CASE("candidate set record round trip") {
  CandidateSet s;
  s.seed = 3;
  s.n_steps = 5;
  s.sigma = 0.1;
  s.goal = scenario::GoalPoint{1, 2, 0.3};
  Rng rng(9);
  s.candidates = {random_traj(rng), random_traj(rng)};
  const auto back = candidate_set_from_json(candidate_set_to_json(s));
  CHECK(back.candidates == s.candidates);
  CHECK(back.goal == s.goal);
  CHECK(back.n_steps == 5);
  s.goal.reset();
  CHECK_FALSE(candidate_set_from_json(candidate_set_to_json(s)).goal.has_value());
}
