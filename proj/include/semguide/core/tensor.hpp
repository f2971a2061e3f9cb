// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace semguide {

struct TensorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shape / rank / extent violations. Raised before any computation happens.
struct ShapeError : TensorError {
  using TensorError::TensorError;
};

/// NaN / Inf surfaced by a primitive op; the message names the op.
struct NumericError : TensorError {
  using TensorError::TensorError;
};

using Shape = std::vector<int>;

inline std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (int e : s) {
    if (e < 0) throw ShapeError("negative extent in shape");
    n *= e;
  }
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

template <typename S>
class Tape;

/// Dense row-major tensor over scalar S (float for training, double for
/// gradient checks). Values are immutable once a tensor participates in a
/// tape; ops always allocate fresh storage. Copies are shallow (shared
/// storage), which is safe under that convention.
template <typename S>
class Tensor {
 public:
  using Scalar = S;

  Tensor() = default;

  Tensor(Shape shape, std::shared_ptr<std::vector<S>> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != static_cast<std::int64_t>(data_->size()))
      throw ShapeError("tensor data length does not match shape " + shape_str(shape_));
  }

  static Tensor zeros(Shape shape) {
    auto n = shape_numel(shape);
    return Tensor(std::move(shape), std::make_shared<std::vector<S>>(n, S(0)));
  }

  static Tensor full(Shape shape, S value) {
    auto n = shape_numel(shape);
    return Tensor(std::move(shape), std::make_shared<std::vector<S>>(n, value));
  }

  static Tensor from_data(Shape shape, std::vector<S> values) {
    return Tensor(std::move(shape), std::make_shared<std::vector<S>>(std::move(values)));
  }

  static Tensor scalar(S value) { return full({}, value); }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int extent(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  std::int64_t size() const { return data_ ? static_cast<std::int64_t>(data_->size()) : 0; }
  bool defined() const { return static_cast<bool>(data_); }

  const S* data() const { return data_->data(); }
  S* data() { return data_->data(); }
  const std::vector<S>& values() const { return *data_; }
  std::vector<S>& values() { return *data_; }
  std::shared_ptr<std::vector<S>> storage() const { return data_; }

  S operator[](std::int64_t i) const { return (*data_)[static_cast<std::size_t>(i)]; }
  S& operator[](std::int64_t i) { return (*data_)[static_cast<std::size_t>(i)]; }

  /// Value of a scalar (size-1) tensor.
  S item() const {
    if (size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape_));
    return (*data_)[0];
  }

  bool requires_grad() const { return requires_grad_; }
  bool on_tape() const { return tape_ != nullptr && node_ >= 0; }
  Tape<S>* tape() const { return tape_; }
  int node() const { return node_; }

  void attach(Tape<S>* tape, int node, bool requires_grad = false) {
    tape_ = tape;
    node_ = node;
    requires_grad_ = requires_grad;
  }

  /// Same storage, detached from any tape (stops gradient).
  Tensor detached() const { return Tensor(shape_, data_); }

  /// Deep copy of the values, detached.
  Tensor clone() const {
    return Tensor(shape_, std::make_shared<std::vector<S>>(*data_));
  }

  bool all_finite() const {
    for (S v : *data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

 private:
  Shape shape_;
  std::shared_ptr<std::vector<S>> data_;
  Tape<S>* tape_ = nullptr;
  int node_ = -1;
  bool requires_grad_ = false;
};

using Tensor32 = Tensor<float>;
using Tensor64 = Tensor<double>;

}  // namespace semguide
