#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace persel::nd {

using Index = std::int64_t;

/// Dense row-major tensor of doubles. Rank 0 tensors are scalars with one
/// element; most of the library works with rank 1 (vectors) and rank 2
/// (matrices, stored as [rows, cols]).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<Index> shape)
      : shape_(std::move(shape)), values_(checked_numel(shape_), 0.0) {}
  Tensor(std::vector<Index> shape, std::vector<double> values)
      : shape_(std::move(shape)), values_(std::move(values)) {
    if (checked_numel(shape_) != static_cast<Index>(values_.size()))
      throw std::invalid_argument("tensor: shape does not match value count");
  }

  static Tensor zeros(std::vector<Index> shape) { return Tensor(std::move(shape)); }
  static Tensor scalar(double v) { return Tensor({}, {v}); }
  static Tensor vec(std::vector<double> v) {
    const Index n = static_cast<Index>(v.size());
    return Tensor({n}, std::move(v));
  }
  static Tensor full(std::vector<Index> shape, double v) {
    Tensor t(std::move(shape));
    for (double& x : t.values_) x = v;
    return t;
  }

  const std::vector<Index>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  Index dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  Index numel() const { return static_cast<Index>(values_.size()); }
  bool empty() const { return values_.empty(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& at(Index i) { return values_[static_cast<std::size_t>(i)]; }
  double at(Index i) const { return values_[static_cast<std::size_t>(i)]; }
  double& at(Index r, Index c) { return values_[static_cast<std::size_t>(r * dim(1) + c)]; }
  double at(Index r, Index c) const { return values_[static_cast<std::size_t>(r * dim(1) + c)]; }

  /// Rows of a rank-2 tensor.
  Index rows() const { return rank() == 2 ? dim(0) : (rank() == 1 ? 1 : 0); }
  Index cols() const { return rank() == 2 ? dim(1) : (rank() == 1 ? dim(0) : 0); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const;

  std::string shape_str() const;

 private:
  static Index checked_numel(const std::vector<Index>& shape) {
    Index n = 1;
    for (Index d : shape) {
      if (d < 0) throw std::invalid_argument("tensor: negative extent");
      n *= d;
    }
    return n;
  }

  std::vector<Index> shape_;
  std::vector<double> values_;
};

}  // namespace persel::nd
