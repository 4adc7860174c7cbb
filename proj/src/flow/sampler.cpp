#include "goalflow/flow/sampler.hpp"

#include <random>
#include <stdexcept>

#include "goalflow/nn/random.hpp"
#include "goalflow/scenario/dataset_io.hpp"

namespace goalflow::flow {

Tensor draw_noise(std::size_t candidates, Scalar sigma, std::uint64_t seed) {
  if (!(sigma > 0)) throw std::invalid_argument("draw_noise: sigma must be positive");
  Tensor x({candidates, kTrajValues});
  for (std::size_t m = 0; m < candidates; ++m) {
    Rng rng(derive_seed(seed, m));
    std::normal_distribution<Scalar> noise(0.0, sigma);
    for (std::size_t k = 0; k < kTrajValues; ++k) x.at(m, k) = noise(rng);
  }
  return x;
}

std::vector<scenario::Trajectory> sample_with_field(const VelocityField& field,
                                                    const TrajectoryNormalizer& normalizer,
                                                    const SamplingOptions& options) {
  if (options.candidates == 0) throw std::invalid_argument("sampling needs at least one candidate");
  const Tensor x = integrate(draw_noise(options.candidates, options.sigma, options.seed),
                             timestep_schedule(options.n_steps, options.shift), field);
  std::vector<scenario::Trajectory> out;
  for (std::size_t m = 0; m < options.candidates; ++m) {
    out.push_back(normalizer.denormalize(x.data().subspan(m * kTrajValues, kTrajValues)));
  }
  return out;
}

std::vector<scenario::Trajectory> sample_trajectories(const VelocityNet& net,
                                                      const TrajectoryNormalizer& normalizer,
                                                      const Var& env,
                                                      const std::optional<scenario::GoalPoint>& goal,
                                                      const SamplingOptions& options) {
  nn::NoGradGuard no_grad;
  Tensor g({1, kChannels});
  if (goal) {
    g.at(0, 0) = goal->x;
    g.at(0, 1) = goal->y;
    g.at(0, 2) = goal->heading;
  }
  const auto cond = net.repeat(net.condition(env, g, {true}, {goal.has_value()}), options.candidates);
  std::vector<Scalar> t(options.candidates);
  const VelocityField field = [&](const Tensor& x, Scalar time) {
    std::fill(t.begin(), t.end(), time);
    return net.velocity(cond, Var(x), t).value();
  };
  return sample_with_field(field, normalizer, options);
}

nlohmann::json candidate_set_to_json(const CandidateSet& set) {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : set.candidates) cands.push_back(scenario::to_json(c));
  return {{"seed", set.seed},
          {"n_steps", set.n_steps},
          {"sigma", set.sigma},
          {"shift", set.shift},
          {"goal", set.goal ? scenario::to_json(*set.goal) : nlohmann::json(nullptr)},
          {"candidates", cands}};
}

CandidateSet candidate_set_from_json(const nlohmann::json& j) {
  try {
    CandidateSet s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.n_steps = j.at("n_steps").get<std::size_t>();
    s.sigma = j.at("sigma").get<Scalar>();
    s.shift = j.value("shift", 1.0);
    if (!j.at("goal").is_null()) s.goal = scenario::pose_from_json(j.at("goal"));
    for (const auto& c : j.at("candidates")) s.candidates.push_back(scenario::trajectory_from_json(c));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw scenario::DatasetError(std::string("candidate set schema error: ") + e.what());
  }
}

}  // namespace goalflow::flow
