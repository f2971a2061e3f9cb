// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "semguide/core/tensor.hpp"

namespace semguide {

enum class OpKind {
  leaf,
  add, sub, mul, div, neg, abs, exp, log, sqrt, sin, cos,
  sigmoid, elu, clamp, minimum, maximum,
  sum, mean, min_axis, max_axis,
  matmul, conv2d, avg_pool, upsample_bilinear, group_norm,
  concat, slice, reshape,
  spatial_gradient_x, spatial_gradient_y,
  bilinear_sample, pac, custom_unary,
};

inline const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::leaf: return "leaf";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::div: return "div";
    case OpKind::neg: return "neg";
    case OpKind::abs: return "abs";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::sqrt: return "sqrt";
    case OpKind::sin: return "sin";
    case OpKind::cos: return "cos";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::elu: return "elu";
    case OpKind::clamp: return "clamp";
    case OpKind::minimum: return "minimum";
    case OpKind::maximum: return "maximum";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::min_axis: return "min_axis";
    case OpKind::max_axis: return "max_axis";
    case OpKind::matmul: return "matmul";
    case OpKind::conv2d: return "conv2d";
    case OpKind::avg_pool: return "avg_pool";
    case OpKind::upsample_bilinear: return "upsample_bilinear";
    case OpKind::group_norm: return "group_norm";
    case OpKind::concat: return "concat";
    case OpKind::slice: return "slice";
    case OpKind::reshape: return "reshape";
    case OpKind::spatial_gradient_x: return "spatial_gradient_x";
    case OpKind::spatial_gradient_y: return "spatial_gradient_y";
    case OpKind::bilinear_sample: return "bilinear_sample";
    case OpKind::pac: return "pac";
    case OpKind::custom_unary: return "custom_unary";
  }
  return "?";
}

/// Reverse-mode tape. Nodes are appended in creation order, which is a
/// topological order by construction; backward replays them in reverse.
/// A tape belongs to exactly one training context and is not shared.
template <typename S>
class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor<S>& grad_out, Tape<S>& tape)>;

  struct Node {
    OpKind kind;
    std::vector<int> parents;
    BackwardFn backward;  // saved context lives in this closure
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Register a leaf. The returned tensor shares storage with `value`.
  Tensor<S> leaf(const Tensor<S>& value, bool requires_grad = true) {
    Tensor<S> out = value.detached();
    int id = record(OpKind::leaf, {}, nullptr);
    out.attach(this, id, requires_grad);
    return out;
  }

  int record(OpKind kind, std::vector<int> parents, BackwardFn backward) {
    nodes_.push_back(Node{kind, std::move(parents), std::move(backward)});
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::size_t node_count() const { return nodes_.size(); }

  /// Accumulate a partial gradient into a node's slot (sum over paths).
  void accumulate(int node, const Tensor<S>& partial) {
    if (node < 0) return;
    Tensor<S>& g = grads_[static_cast<std::size_t>(node)];
    if (!g.defined()) {
      g = partial.clone();
    } else {
      if (g.shape() != partial.shape())
        throw ShapeError("gradient shape mismatch during accumulation");
      S* gd = g.data();
      const S* pd = partial.data();
      for (std::int64_t i = 0; i < g.size(); ++i) gd[i] += pd[i];
    }
  }

  /// Run reverse-mode accumulation from a scalar loss. Gradients are
  /// queryable via grad() afterwards; a second call requires reset().
  void backward(const Tensor<S>& loss) {
    if (loss.tape() != this || loss.node() < 0)
      throw TensorError("backward: loss is not recorded on this tape");
    if (loss.size() != 1)
      throw ShapeError("backward: loss must be scalar, got " + shape_str(loss.shape()));
    if (consumed_)
      throw TensorError("backward: tape already consumed; call reset() first");
    consumed_ = true;
    grads_.assign(nodes_.size(), Tensor<S>());
    grads_[static_cast<std::size_t>(loss.node())] = Tensor<S>::full(loss.shape(), S(1));
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      const Node& n = nodes_[static_cast<std::size_t>(i)];
      const Tensor<S>& g = grads_[static_cast<std::size_t>(i)];
      if (!g.defined() || !n.backward) continue;
      n.backward(g, *this);
    }
  }

  /// Gradient of the last backward() w.r.t. a recorded tensor. Leaves that
  /// no path reached get a zero gradient of the right shape.
  Tensor<S> grad(const Tensor<S>& t) const {
    if (t.tape() != this || t.node() < 0)
      throw TensorError("grad: tensor is not recorded on this tape");
    if (static_cast<std::size_t>(t.node()) >= grads_.size()) return Tensor<S>::zeros(t.shape());
    const Tensor<S>& g = grads_[static_cast<std::size_t>(t.node())];
    if (!g.defined()) return Tensor<S>::zeros(t.shape());
    return g;
  }

  void reset() {
    nodes_.clear();
    grads_.clear();
    consumed_ = false;
  }

  bool consumed() const { return consumed_; }
  OpKind kind_of(int node) const { return nodes_.at(static_cast<std::size_t>(node)).kind; }

 private:
  std::vector<Node> nodes_;
  std::vector<Tensor<S>> grads_;
  bool consumed_ = false;
};

/// Pick the common tape of a set of inputs (nullptr when none is taped).
template <typename S>
Tape<S>* common_tape(std::initializer_list<const Tensor<S>*> ts) {
  Tape<S>* tape = nullptr;
  for (const Tensor<S>* t : ts) {
    if (!t->on_tape()) continue;
    if (tape == nullptr) tape = t->tape();
    else if (tape != t->tape()) throw TensorError("inputs recorded on different tapes");
  }
  return tape;
}

}  // namespace semguide
