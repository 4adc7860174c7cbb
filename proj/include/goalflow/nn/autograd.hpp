#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "goalflow/nn/tensor.hpp"

namespace goalflow::nn {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the recorded computation. Leaves have no backward function.
struct Node {
  Tensor value;
  Tensor grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward_fn;

  /// Adds `g` into `grad`, allocating on first use.
  void accumulate(const Tensor& g);
  Tensor& grad_buffer();
};

/// Handle to a tensor participating in reverse-mode differentiation.
/// Copies share the same node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  Scalar item() const { return node_->value.item(); }

  void zero_grad();
  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

/// Thread-local switch: when disabled, operations record no graph.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Builds the output node of an operation. The backward function is only
/// attached when recording is on and some parent requires a gradient.
Var make_result(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward);

/// Populates gradients of every node reachable from a scalar `loss`.
void backward(const Var& loss);

/// Same value, cut from the graph.
Var detach(const Var& x);

}  // namespace goalflow::nn
