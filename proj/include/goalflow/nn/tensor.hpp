#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace goalflow::nn {

/// Repo-wide floating precision.
using Scalar = double;
using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array. Most operations view it as a matrix of
/// `rows() x cols()`, where `cols()` is the innermost dimension.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Scalar fill = 0);
  Tensor(Shape shape, std::vector<Scalar> data);

  static Tensor scalar(Scalar value);
  static Tensor from_rows(const std::vector<std::vector<Scalar>>& rows);

  const Shape& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t cols() const { return shape_.empty() ? 1 : shape_.back(); }
  std::size_t rows() const { return cols() == 0 ? 0 : size() / cols(); }

  std::span<Scalar> data() { return data_; }
  std::span<const Scalar> data() const { return data_; }
  std::vector<Scalar>& storage() { return data_; }
  const std::vector<Scalar>& storage() const { return data_; }

  Scalar& operator[](std::size_t i) { return data_[i]; }
  Scalar operator[](std::size_t i) const { return data_[i]; }
  Scalar& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  Scalar at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  Scalar item() const;

  /// Same data under a new shape; element count must match.
  Tensor reshaped(Shape shape) const;
  void fill(Scalar value);
  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<Scalar> data_;
};

}  // namespace goalflow::nn
