#include "goalflow/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace goalflow::nn {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, Scalar fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<Scalar> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_numel(shape_)) {
    throw std::invalid_argument("Tensor: data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::scalar(Scalar value) { return Tensor({1}, std::vector<Scalar>{value}); }

Tensor Tensor::from_rows(const std::vector<std::vector<Scalar>>& rows) {
  if (rows.empty()) throw std::invalid_argument("Tensor::from_rows: no rows");
  const std::size_t c = rows.front().size();
  std::vector<Scalar> data;
  data.reserve(rows.size() * c);
  for (const auto& r : rows) {
    if (r.size() != c) throw std::invalid_argument("Tensor::from_rows: ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({rows.size(), c}, std::move(data));
}

Scalar Tensor::item() const {
  if (data_.size() != 1) {
    throw std::invalid_argument("Tensor::item: tensor of shape " + shape_string(shape_) +
                                " is not a scalar");
  }
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size()) {
    throw std::invalid_argument("Tensor::reshaped: cannot view " + shape_string(shape_) +
                                " as " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(Scalar value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](Scalar v) { return std::isfinite(v); });
}

}  // namespace goalflow::nn
