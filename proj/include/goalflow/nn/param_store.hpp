#pragma once

#include <map>
#include <string>
#include <vector>

#include "goalflow/nn/autograd.hpp"

namespace goalflow::nn {

/// Named trainable parameters, keyed by dotted path ("planner.block0.attn.q.weight").
/// Iteration order is lexicographic and therefore stable.
class ParamStore {
 public:
  /// Registers a new parameter; names must be unique.
  Var create(const std::string& name, Tensor init);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  const Var& at(const std::string& name) const;
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  /// Parameters whose names start with `prefix`, sharing the same nodes.
  ParamStore subset(const std::string& prefix) const;
  /// Parameters matching any of the prefixes.
  ParamStore subset(const std::vector<std::string>& prefixes) const;

  void zero_grad();

  /// Snapshot of current values.
  std::map<std::string, Tensor> values() const;
  /// Overwrites values in place; every stored name must be present with the
  /// same shape. Names in `values` that are not parameters are ignored.
  void load_values(const std::map<std::string, Tensor>& values);

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Var> params_;
};

}  // namespace goalflow::nn
