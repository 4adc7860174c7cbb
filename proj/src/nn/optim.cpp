#include "goalflow/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace goalflow::nn {

void Adam::step(const ParamStore& params) {
  ++steps_;
  const Scalar t = static_cast<Scalar>(steps_);
  const Scalar c1 = 1 - std::pow(config_.beta1, t);
  const Scalar c2 = 1 - std::pow(config_.beta2, t);
  for (const auto& [name, p] : params) {
    Var param = p;
    Tensor& value = param.mutable_value();
    auto [mit, m_new] = m_.try_emplace(name, value.shape());
    auto [vit, v_new] = v_.try_emplace(name, value.shape());
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    if (m.shape() != value.shape() || v.shape() != value.shape()) {
      throw std::invalid_argument("Adam: moment buffer shape mismatch for " + name);
    }
    const bool has_grad = param.has_grad();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const Scalar g = has_grad ? param.grad()[i] : 0;
      m[i] = config_.beta1 * m[i] + (1 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1 - config_.beta2) * g * g;
      value[i] -= config_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.eps);
    }
  }
}

std::map<std::string, Tensor> Adam::export_state(const std::string& prefix) const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, t] : m_) out.emplace(prefix + "m." + name, t);
  for (const auto& [name, t] : v_) out.emplace(prefix + "v." + name, t);
  return out;
}

void Adam::import_state(const std::map<std::string, Tensor>& tensors, const std::string& prefix,
                        std::int64_t steps) {
  m_.clear();
  v_.clear();
  const std::string pm = prefix + "m.", pv = prefix + "v.";
  for (const auto& [name, t] : tensors) {
    if (name.compare(0, pm.size(), pm) == 0) m_.emplace(name.substr(pm.size()), t);
    if (name.compare(0, pv.size(), pv) == 0) v_.emplace(name.substr(pv.size()), t);
  }
  steps_ = steps;
}

}  // namespace goalflow::nn
