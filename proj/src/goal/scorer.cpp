#include "goalflow/goal/scorer.hpp"

#include <cmath>
#include <stdexcept>

namespace goalflow::goal {

GoalScorer::GoalScorer(nn::ParamStore& store, const std::string& name, const GoalScorerConfig& config,
                       const std::vector<scenario::GoalPoint>& vocab, Rng& rng)
    : config_(config) {
  if (vocab.size() < 2) throw std::invalid_argument("GoalScorer: vocabulary needs at least 2 points");
  Tensor rows({vocab.size(), 3});
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    rows.at(i, 0) = vocab[i].x;
    rows.at(i, 1) = vocab[i].y;
    rows.at(i, 2) = vocab[i].heading;
  }
  vocab_codes_ = nn::sinusoidal_encode_rows(rows, config.encoding_dim);
  vocab_proj_ = nn::Linear(store, name + ".vocab_proj", 3 * config.encoding_dim, config.dim, rng);
  for (std::size_t l = 0; l < config.layers; ++l) {
    blocks_.emplace_back(store, name + ".block" + std::to_string(l), config.dim, config.heads, rng);
  }
  norm_ = nn::LayerNorm(store, name + ".norm", config.dim);
  dis_head_ = nn::Mlp(store, name + ".dis_head", config.dim, config.dim, 1, rng);
  dac_head_ = nn::Mlp(store, name + ".dac_head", config.dim, config.dim, 1, rng);
}

Var GoalScorer::vocabulary_embedding() const { return vocab_proj_(Var(vocab_codes_)); }

GoalScorer::Output GoalScorer::forward(const Var& tokens, const Var& ego, std::size_t batch) const {
  const std::size_t n = vocab_size();
  if (ego.rows() != batch || tokens.rows() % batch != 0 || tokens.cols() != config_.dim ||
      ego.cols() != config_.dim) {
    throw std::invalid_argument("GoalScorer: token/ego shapes do not match batch and dim");
  }
  Var x = nn::add(nn::tile_rows(vocabulary_embedding(), batch), nn::repeat_rows(ego, n));
  for (const auto& block : blocks_) x = block(x, tokens, batch);
  x = norm_(x);
  Output out;
  out.dis = nn::softmax_rows(nn::reshape(dis_head_(x), {batch, n}));
  out.dac = nn::sigmoid(nn::reshape(dac_head_(x), {batch, n}));
  return out;
}

FinalScores final_scores(std::span<const Scalar> dis, std::span<const Scalar> dac, double w1, double w2,
                         double eps_clamp) {
  if (dis.size() != dac.size() || dis.empty()) {
    throw std::invalid_argument("final_scores: dis and dac must be non-empty and of equal length");
  }
  if (w1 < 0 || w2 < 0) throw std::invalid_argument("final_scores: weights must be non-negative");
  FinalScores out;
  out.scores.resize(dis.size());
  for (std::size_t i = 0; i < dis.size(); ++i) {
    out.scores[i] = w1 * std::log(std::max(dis[i], eps_clamp)) + w2 * std::log(std::max(dac[i], eps_clamp));
    if (out.scores[i] > out.scores[out.best]) out.best = i;
  }
  return out;
}

GoalLoss goal_losses(const Var& dis_pred, const Var& dac_pred, const Tensor& dis_target,
                     const Tensor& dac_target, double w4, double w5, double eps_clamp) {
  if (dis_pred.shape() != dis_target.shape() || dac_pred.shape() != dac_target.shape()) {
    throw std::invalid_argument("goal_losses: prediction and target shapes differ");
  }
  const double batch = static_cast<double>(dis_pred.rows());
  const double cells = static_cast<double>(dac_pred.value().size());
  const Var l_dis = nn::affine(nn::sum(nn::mul(Var(dis_target), nn::log_clamped(dis_pred, eps_clamp))), -1.0 / batch);

  Tensor not_target = dac_target;
  for (auto& v : not_target.storage()) v = 1.0 - v;
  const Var pos = nn::mul(Var(dac_target), nn::log_clamped(dac_pred, eps_clamp));
  const Var neg = nn::mul(Var(not_target), nn::log_clamped(nn::affine(dac_pred, -1.0, 1.0), eps_clamp));
  const Var l_dac = nn::affine(nn::sum(nn::add(pos, neg)), -1.0 / cells);

  GoalLoss out;
  out.dis = l_dis.item();
  out.dac = l_dac.item();
  out.total = nn::add(nn::affine(l_dis, w4), nn::affine(l_dac, w5));
  return out;
}

}  // namespace goalflow::goal
