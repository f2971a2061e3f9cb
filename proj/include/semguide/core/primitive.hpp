// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "semguide/core/nn_ops.hpp"
#include "semguide/core/ops.hpp"

namespace semguide {

/// Attributes for the dynamic primitive entry point. Each op reads only the
/// fields it documents; the rest are ignored.
struct PrimitiveAttrs {
  int stride = 1;
  int pad = 0;
  int window = 2;
  int scale = 2;
  int groups = 1;
  int axis = 0;
  int start = 0;
  int end = 0;
  double lo = 0.0;
  double hi = 1.0;
  Shape shape;  // reshape target
};

inline std::vector<OpKind> registered_primitives() {
  return {OpKind::add, OpKind::sub, OpKind::mul, OpKind::div, OpKind::neg,
          OpKind::abs, OpKind::exp, OpKind::log, OpKind::sqrt, OpKind::sin,
          OpKind::cos, OpKind::sigmoid, OpKind::elu, OpKind::clamp,
          OpKind::minimum, OpKind::maximum, OpKind::sum, OpKind::mean,
          OpKind::min_axis, OpKind::max_axis, OpKind::matmul, OpKind::conv2d,
          OpKind::avg_pool, OpKind::upsample_bilinear, OpKind::group_norm,
          OpKind::concat, OpKind::slice, OpKind::reshape,
          OpKind::spatial_gradient_x, OpKind::spatial_gradient_y};
}

/// Dynamic dispatch over the registered primitive kinds. Mostly useful for
/// harnesses that sweep every op with a generic driver; normal code calls the
/// typed free functions directly.
template <typename S>
Tensor<S> primitive_forward(OpKind kind, const std::vector<Tensor<S>>& inputs,
                            const PrimitiveAttrs& attrs = {}) {
  auto need = [&](std::size_t n) {
    if (inputs.size() != n)
      throw ShapeError(std::string(op_name(kind)) + ": expected " + std::to_string(n) + " inputs, got " +
                       std::to_string(inputs.size()));
  };
  switch (kind) {
    case OpKind::add: need(2); return add(inputs[0], inputs[1]);
    case OpKind::sub: need(2); return sub(inputs[0], inputs[1]);
    case OpKind::mul: need(2); return mul(inputs[0], inputs[1]);
    case OpKind::div: need(2); return div(inputs[0], inputs[1]);
    case OpKind::neg: need(1); return neg(inputs[0]);
    case OpKind::abs: need(1); return abs(inputs[0]);
    case OpKind::exp: need(1); return exp(inputs[0]);
    case OpKind::log: need(1); return log(inputs[0]);
    case OpKind::sqrt: need(1); return sqrt(inputs[0]);
    case OpKind::sin: need(1); return sin(inputs[0]);
    case OpKind::cos: need(1); return cos(inputs[0]);
    case OpKind::sigmoid: need(1); return sigmoid(inputs[0]);
    case OpKind::elu: need(1); return elu(inputs[0]);
    case OpKind::clamp: need(1); return clamp(inputs[0], static_cast<S>(attrs.lo), static_cast<S>(attrs.hi));
    case OpKind::minimum: need(2); return minimum(inputs[0], inputs[1]);
    case OpKind::maximum: need(2); return maximum(inputs[0], inputs[1]);
    case OpKind::sum: need(1); return sum(inputs[0]);
    case OpKind::mean: need(1); return mean(inputs[0]);
    case OpKind::min_axis: need(1); return min_axis(inputs[0], attrs.axis);
    case OpKind::max_axis: need(1); return max_axis(inputs[0], attrs.axis);
    case OpKind::matmul: need(2); return matmul(inputs[0], inputs[1]);
    case OpKind::conv2d:
      if (inputs.size() == 3) return conv2d(inputs[0], inputs[1], inputs[2], attrs.stride, attrs.pad);
      need(2);
      return conv2d(inputs[0], inputs[1], attrs.stride, attrs.pad);
    case OpKind::avg_pool: need(1); return avg_pool(inputs[0], attrs.window, attrs.stride);
    case OpKind::upsample_bilinear: need(1); return upsample_bilinear(inputs[0], attrs.scale);
    case OpKind::group_norm: need(3); return group_norm(inputs[0], inputs[1], inputs[2], attrs.groups);
    case OpKind::concat: return concat(inputs, attrs.axis);
    case OpKind::slice: need(1); return slice(inputs[0], attrs.axis, attrs.start, attrs.end);
    case OpKind::reshape: need(1); return reshape(inputs[0], attrs.shape);
    case OpKind::spatial_gradient_x: need(1); return spatial_gradient_x(inputs[0]);
    case OpKind::spatial_gradient_y: need(1); return spatial_gradient_y(inputs[0]);
    default:
      throw TensorError(std::string("primitive_forward: unknown kind '") + op_name(kind) + "'");
  }
}

}  // namespace semguide
