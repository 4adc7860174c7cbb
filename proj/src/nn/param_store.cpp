#include "goalflow/nn/param_store.hpp"

#include <stdexcept>

namespace goalflow::nn {

Var ParamStore::create(const std::string& name, Tensor init) {
  if (params_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  Var v(std::move(init), true);
  params_.emplace(name, v);
  return v;
}

const Var& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : params_) n += v.value().size();
  return n;
}

ParamStore ParamStore::subset(const std::string& prefix) const {
  ParamStore out;
  for (const auto& [name, v] : params_) {
    if (name.compare(0, prefix.size(), prefix) == 0) out.params_.emplace(name, v);
  }
  return out;
}

ParamStore ParamStore::subset(const std::vector<std::string>& prefixes) const {
  ParamStore out;
  for (const auto& prefix : prefixes) {
    for (const auto& [name, v] : subset(prefix)) out.params_.emplace(name, v);
  }
  return out;
}

void ParamStore::zero_grad() {
  for (auto& [_, v] : params_) {
    Var copy = v;
    copy.zero_grad();
  }
}

std::map<std::string, Tensor> ParamStore::values() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, v] : params_) out.emplace(name, v.value());
  return out;
}

void ParamStore::load_values(const std::map<std::string, Tensor>& values) {
  for (auto& [name, v] : params_) {
    auto it = values.find(name);
    if (it == values.end()) throw std::runtime_error("checkpoint is missing parameter " + name);
    if (it->second.shape() != v.shape()) {
      throw std::runtime_error("checkpoint parameter " + name + " has shape " +
                               shape_string(it->second.shape()) + ", model expects " +
                               shape_string(v.shape()));
    }
    Var copy = v;
    copy.mutable_value() = it->second;
  }
}

}  // namespace goalflow::nn
