#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tseg/error.hpp"

namespace tseg {

using Shape = std::vector<int>;

inline std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

inline std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

/// Dense row-major tensor. 4-d activations are ordered [batch, channel, height, width].
/// The gradient buffer stays empty until something accumulates into it.
template <typename T>
class TensorT {
 public:
  using Ptr = std::shared_ptr<TensorT<T>>;

  explicit TensorT(Shape shape, bool trainable = false)
      : shape_(std::move(shape)), trainable_(trainable) {
    require(!shape_.empty(), ErrorCode::precondition, "tensor: shape must have at least one axis");
    for (int d : shape_) {
      require(d >= 1, ErrorCode::precondition, "tensor: extents must be positive");
    }
    numel_ = shape_numel(shape_);
    require(numel_ <= (std::int64_t(1) << 31), ErrorCode::precondition, "tensor: too large");
    data_.assign(std::size_t(numel_), T(0));
  }

  static Ptr create(Shape shape, bool trainable = false) {
    return std::make_shared<TensorT<T>>(std::move(shape), trainable);
  }

  static Ptr full(Shape shape, T value) {
    auto t = create(std::move(shape));
    for (auto& v : t->data_) v = value;
    return t;
  }

  static Ptr from_data(Shape shape, std::vector<T> values) {
    auto t = create(std::move(shape));
    require(std::int64_t(values.size()) == t->numel_, ErrorCode::precondition,
            "tensor: data length does not match shape");
    t->data_ = std::move(values);
    return t;
  }

  const Shape& shape() const { return shape_; }
  int ndim() const { return int(shape_.size()); }
  int dim(int axis) const { return shape_[std::size_t(axis)]; }
  std::int64_t numel() const { return numel_; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool trainable() const { return trainable_; }
  void set_trainable(bool value) { trainable_ = value; }

  bool has_grad() const { return !grad_.empty(); }

  /// Materializes a zero-filled gradient buffer on first use.
  std::vector<T>& grad() {
    if (grad_.empty()) grad_.assign(std::size_t(numel_), T(0));
    return grad_;
  }

  const std::vector<T>& grad() const {
    require(!grad_.empty(), ErrorCode::precondition, "tensor: gradient not populated");
    return grad_;
  }

  void zero_grad() {
    for (auto& g : grad_) g = T(0);
  }

  void drop_grad() { grad_.clear(); }

  T scalar() const {
    require(numel_ == 1, ErrorCode::precondition, "tensor: scalar() requires a single element");
    return data_[0];
  }

 private:
  Shape shape_;
  std::int64_t numel_ = 0;
  std::vector<T> data_;
  std::vector<T> grad_;
  bool trainable_ = false;
};

template <typename T>
using TensorPtrT = std::shared_ptr<TensorT<T>>;

using Tensor = TensorT<float>;
using TensorPtr = TensorPtrT<float>;

/// NaN/Inf is an error state, never silently propagated.
template <typename T>
void check_finite(const TensorT<T>& t, const char* op_name) {
  for (const T& v : t.data()) {
    if (!std::isfinite(v)) {
      fail(ErrorCode::numeric, std::string(op_name) + ": non-finite value produced");
    }
  }
}

}  // namespace tseg
