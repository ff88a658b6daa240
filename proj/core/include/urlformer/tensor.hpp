#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "urlformer/errors.hpp"

namespace urlformer {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// Dense row-major array of T with an optional gradient buffer of the same
// shape. Rank 0 (scalar), 1 and 2 are the ranks the model uses.
// T is float for training and inference; double instantiations exist for
// gradient verification only.
template <typename T>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(Shape shape) : shape_(std::move(shape)) {
    for (std::size_t e : shape_) {
      if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape_));
    }
    data_.assign(shape_numel(shape_), T(0));
  }

  TensorT(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_numel(shape_)) {
      throw DimensionError("data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_str(shape_));
    }
  }

  static TensorT zeros(Shape shape) { return TensorT(std::move(shape)); }

  static TensorT full(Shape shape, T value) {
    TensorT t(std::move(shape));
    for (T& x : t.data_) x = value;
    return t;
  }

  static TensorT scalar(T value) { return TensorT(Shape{}, std::vector<T>{value}); }

  // 2-D convenience for tests and hand-built fixtures.
  static TensorT matrix(std::initializer_list<std::initializer_list<T>> rows) {
    Shape shape{rows.size(), rows.begin()->size()};
    std::vector<T> data;
    data.reserve(shape_numel(shape));
    for (const auto& row : rows) {
      if (row.size() != shape[1]) throw DimensionError("ragged matrix initializer");
      data.insert(data.end(), row.begin(), row.end());
    }
    return TensorT(std::move(shape), std::move(data));
  }

  static TensorT vector(std::initializer_list<T> values) {
    return TensorT(Shape{values.size()}, std::vector<T>(values));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

  // Row/column extents with rank-1 tensors treated as a single row.
  std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return rank() == 2 ? shape_[1] : numel(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& at(std::size_t i) { return data_[i]; }
  T at(std::size_t i) const { return data_[i]; }
  T& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  T at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

  // --- gradient buffer -------------------------------------------------

  bool has_grad() const { return !grad_.empty(); }

  // Allocates (zero-filled) on first use; repeated calls keep contents.
  std::vector<T>& grad() {
    if (grad_.empty()) grad_.assign(data_.size(), T(0));
    return grad_;
  }
  const std::vector<T>& grad() const { return grad_; }

  T* grad_data() { return grad().data(); }

  void zero_grad() {
    if (!grad_.empty()) grad_.assign(data_.size(), T(0));
  }

  void drop_grad() { grad_.clear(); grad_.shrink_to_fit(); }

  // Releases the value payload. Used by the backward pass to trim
  // intermediate activations once their gradients have been consumed.
  void release() {
    data_.clear();
    data_.shrink_to_fit();
    grad_.clear();
    grad_.shrink_to_fit();
  }

 private:
  Shape shape_;
  std::vector<T> data_;
  std::vector<T> grad_;
};

using Tensor = TensorT<float>;

}  // namespace urlformer
