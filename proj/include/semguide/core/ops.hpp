// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "semguide/core/tape.hpp"
#include "semguide/core/tensor.hpp"

namespace semguide {

template <typename S>
void check_finite(const Tensor<S>& t, OpKind kind) {
  if (!t.all_finite())
    throw NumericError(std::string("non-finite output from '") + op_name(kind) + "'");
}

namespace detail {

// Binary ops accept equal shapes or a size-1 operand broadcast to the other.
enum class BinShape { same, left_scalar, right_scalar };

template <typename S>
BinShape binary_shape(const Tensor<S>& a, const Tensor<S>& b, OpKind kind) {
  if (a.shape() == b.shape()) return BinShape::same;
  if (a.size() == 1) return BinShape::left_scalar;
  if (b.size() == 1) return BinShape::right_scalar;
  throw ShapeError(std::string(op_name(kind)) + ": shapes " + shape_str(a.shape()) + " vs " +
                   shape_str(b.shape()) + " do not conform");
}

// Sum a gradient down to a size-1 operand's shape.
template <typename S>
Tensor<S> reduce_to_scalar(const Tensor<S>& g, const Shape& target) {
  S acc = 0;
  const S* gd = g.data();
  for (std::int64_t i = 0; i < g.size(); ++i) acc += gd[i];
  return Tensor<S>::full(target, acc);
}

template <typename S, typename FwdFn, typename BackFn>
Tensor<S> binary_op(OpKind kind, const Tensor<S>& a, const Tensor<S>& b, FwdFn f, BackFn make_back) {
  const BinShape bs = binary_shape(a, b, kind);
  const Shape& out_shape = (bs == BinShape::left_scalar) ? b.shape() : a.shape();
  const std::int64_t n = shape_numel(out_shape);
  Tensor<S> out = Tensor<S>::zeros(out_shape);
  const S* ad = a.data();
  const S* bd = b.data();
  S* od = out.data();
  const bool asc = (bs == BinShape::left_scalar);
  const bool bsc = (bs == BinShape::right_scalar);
  for (std::int64_t i = 0; i < n; ++i) od[i] = f(ad[asc ? 0 : i], bd[bsc ? 0 : i]);
  check_finite(out, kind);
  if (Tape<S>* tape = common_tape<S>({&a, &b})) {
    int id = tape->record(kind, {a.node(), b.node()}, make_back(a, b, bs));
    out.attach(tape, id);
  }
  return out;
}

template <typename S, typename FwdFn, typename DerivFn>
Tensor<S> unary_op(OpKind kind, const Tensor<S>& x, FwdFn f, DerivFn dfdx_from_xy) {
  Tensor<S> out = Tensor<S>::zeros(x.shape());
  const S* xd = x.data();
  S* od = out.data();
  for (std::int64_t i = 0; i < x.size(); ++i) od[i] = f(xd[i]);
  check_finite(out, kind);
  if (Tape<S>* tape = x.tape(); tape && x.on_tape()) {
    const int xn = x.node();
    Tensor<S> xv = x.detached();
    Tensor<S> yv = out.detached();
    int id = tape->record(kind, {xn}, [xn, xv, yv, dfdx_from_xy](const Tensor<S>& g, Tape<S>& tp) {
      Tensor<S> gx = Tensor<S>::zeros(xv.shape());
      const S* gd = g.data();
      const S* xd2 = xv.data();
      const S* yd2 = yv.data();
      S* out2 = gx.data();
      for (std::int64_t i = 0; i < gx.size(); ++i) out2[i] = gd[i] * dfdx_from_xy(xd2[i], yd2[i]);
      tp.accumulate(xn, gx);
    });
    out.attach(tape, id);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise binary
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::binary_op<S>(OpKind::add, a, b, [](S x, S y) { return x + y; },
      [](const Tensor<S>& a2, const Tensor<S>& b2, detail::BinShape bs) -> typename Tape<S>::BackwardFn {
        const int an = a2.node(), bn = b2.node();
        const Shape as = a2.shape(), bshape = b2.shape();
        return [an, bn, as, bshape, bs](const Tensor<S>& g, Tape<S>& tp) {
          if (an >= 0)
            tp.accumulate(an, bs == detail::BinShape::left_scalar ? detail::reduce_to_scalar(g, as) : g);
          if (bn >= 0)
            tp.accumulate(bn, bs == detail::BinShape::right_scalar ? detail::reduce_to_scalar(g, bshape) : g);
        };
      });
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::binary_op<S>(OpKind::sub, a, b, [](S x, S y) { return x - y; },
      [](const Tensor<S>& a2, const Tensor<S>& b2, detail::BinShape bs) -> typename Tape<S>::BackwardFn {
        const int an = a2.node(), bn = b2.node();
        const Shape as = a2.shape(), bshape = b2.shape();
        return [an, bn, as, bshape, bs](const Tensor<S>& g, Tape<S>& tp) {
          if (an >= 0)
            tp.accumulate(an, bs == detail::BinShape::left_scalar ? detail::reduce_to_scalar(g, as) : g);
          if (bn >= 0) {
            Tensor<S> ng = Tensor<S>::zeros(g.shape());
            for (std::int64_t i = 0; i < g.size(); ++i) ng[i] = -g[i];
            tp.accumulate(bn, bs == detail::BinShape::right_scalar ? detail::reduce_to_scalar(ng, bshape) : ng);
          }
        };
      });
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::binary_op<S>(OpKind::mul, a, b, [](S x, S y) { return x * y; },
      [](const Tensor<S>& a2, const Tensor<S>& b2, detail::BinShape bs) -> typename Tape<S>::BackwardFn {
        const int an = a2.node(), bn = b2.node();
        Tensor<S> av = a2.detached(), bv = b2.detached();
        return [an, bn, av, bv, bs](const Tensor<S>& g, Tape<S>& tp) {
          const bool asc = bs == detail::BinShape::left_scalar;
          const bool bsc = bs == detail::BinShape::right_scalar;
          if (an >= 0) {
            Tensor<S> ga = Tensor<S>::zeros(g.shape());
            for (std::int64_t i = 0; i < g.size(); ++i) ga[i] = g[i] * bv[bsc ? 0 : i];
            tp.accumulate(an, asc ? detail::reduce_to_scalar(ga, av.shape()) : ga);
          }
          if (bn >= 0) {
            Tensor<S> gb = Tensor<S>::zeros(g.shape());
            for (std::int64_t i = 0; i < g.size(); ++i) gb[i] = g[i] * av[asc ? 0 : i];
            tp.accumulate(bn, bsc ? detail::reduce_to_scalar(gb, bv.shape()) : gb);
          }
        };
      });
}

template <typename S>
Tensor<S> div(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::binary_op<S>(OpKind::div, a, b, [](S x, S y) { return x / y; },
      [](const Tensor<S>& a2, const Tensor<S>& b2, detail::BinShape bs) -> typename Tape<S>::BackwardFn {
        const int an = a2.node(), bn = b2.node();
        Tensor<S> av = a2.detached(), bv = b2.detached();
        return [an, bn, av, bv, bs](const Tensor<S>& g, Tape<S>& tp) {
          const bool asc = bs == detail::BinShape::left_scalar;
          const bool bsc = bs == detail::BinShape::right_scalar;
          if (an >= 0) {
            Tensor<S> ga = Tensor<S>::zeros(g.shape());
            for (std::int64_t i = 0; i < g.size(); ++i) ga[i] = g[i] / bv[bsc ? 0 : i];
            tp.accumulate(an, asc ? detail::reduce_to_scalar(ga, av.shape()) : ga);
          }
          if (bn >= 0) {
            Tensor<S> gb = Tensor<S>::zeros(g.shape());
            for (std::int64_t i = 0; i < g.size(); ++i) {
              const S bi = bv[bsc ? 0 : i];
              gb[i] = -g[i] * av[asc ? 0 : i] / (bi * bi);
            }
            tp.accumulate(bn, bsc ? detail::reduce_to_scalar(gb, bv.shape()) : gb);
          }
        };
      });
}

/// Elementwise min; subgradient routes to the first argument on ties.
template <typename S>
Tensor<S> minimum(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::binary_op<S>(OpKind::minimum, a, b, [](S x, S y) { return x <= y ? x : y; },
      [](const Tensor<S>& a2, const Tensor<S>& b2, detail::BinShape bs) -> typename Tape<S>::BackwardFn {
        const int an = a2.node(), bn = b2.node();
        Tensor<S> av = a2.detached(), bv = b2.detached();
        return [an, bn, av, bv, bs](const Tensor<S>& g, Tape<S>& tp) {
          const bool asc = bs == detail::BinShape::left_scalar;
          const bool bsc = bs == detail::BinShape::right_scalar;
          Tensor<S> ga = Tensor<S>::zeros(g.shape()), gb = Tensor<S>::zeros(g.shape());
          for (std::int64_t i = 0; i < g.size(); ++i) {
            if (av[asc ? 0 : i] <= bv[bsc ? 0 : i]) ga[i] = g[i];
            else gb[i] = g[i];
          }
          if (an >= 0) tp.accumulate(an, asc ? detail::reduce_to_scalar(ga, av.shape()) : ga);
          if (bn >= 0) tp.accumulate(bn, bsc ? detail::reduce_to_scalar(gb, bv.shape()) : gb);
        };
      });
}

template <typename S>
Tensor<S> maximum(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::binary_op<S>(OpKind::maximum, a, b, [](S x, S y) { return x >= y ? x : y; },
      [](const Tensor<S>& a2, const Tensor<S>& b2, detail::BinShape bs) -> typename Tape<S>::BackwardFn {
        const int an = a2.node(), bn = b2.node();
        Tensor<S> av = a2.detached(), bv = b2.detached();
        return [an, bn, av, bv, bs](const Tensor<S>& g, Tape<S>& tp) {
          const bool asc = bs == detail::BinShape::left_scalar;
          const bool bsc = bs == detail::BinShape::right_scalar;
          Tensor<S> ga = Tensor<S>::zeros(g.shape()), gb = Tensor<S>::zeros(g.shape());
          for (std::int64_t i = 0; i < g.size(); ++i) {
            if (av[asc ? 0 : i] >= bv[bsc ? 0 : i]) ga[i] = g[i];
            else gb[i] = g[i];
          }
          if (an >= 0) tp.accumulate(an, asc ? detail::reduce_to_scalar(ga, av.shape()) : ga);
          if (bn >= 0) tp.accumulate(bn, bsc ? detail::reduce_to_scalar(gb, bv.shape()) : gb);
        };
      });
}

// ---------------------------------------------------------------------------
// Elementwise unary
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> neg(const Tensor<S>& x) {
  return detail::unary_op<S>(OpKind::neg, x, [](S v) { return -v; }, [](S, S) { return S(-1); });
}

/// sign(0) = 0, so the subgradient at the kink is zero.
template <typename S>
Tensor<S> abs(const Tensor<S>& x) {
  return detail::unary_op<S>(OpKind::abs, x, [](S v) { return v < 0 ? -v : v; },
                             [](S v, S) { return v > 0 ? S(1) : (v < 0 ? S(-1) : S(0)); });
}

template <typename S>
Tensor<S> exp(const Tensor<S>& x) {
  return detail::unary_op<S>(OpKind::exp, x, [](S v) { return std::exp(v); }, [](S, S y) { return y; });
}

template <typename S>
Tensor<S> log(const Tensor<S>& x) {
  return detail::unary_op<S>(OpKind::log, x, [](S v) { return std::log(v); }, [](S v, S) { return S(1) / v; });
}

template <typename S>
Tensor<S> sqrt(const Tensor<S>& x) {
  return detail::unary_op<S>(OpKind::sqrt, x, [](S v) { return std::sqrt(v); },
                             [](S, S y) { return S(1) / (S(2) * y); });
}

template <typename S>
Tensor<S> sin(const Tensor<S>& x) {
  return detail::unary_op<S>(OpKind::sin, x, [](S v) { return std::sin(v); }, [](S v, S) { return std::cos(v); });
}

template <typename S>
Tensor<S> cos(const Tensor<S>& x) {
  return detail::unary_op<S>(OpKind::cos, x, [](S v) { return std::cos(v); }, [](S v, S) { return -std::sin(v); });
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& x) {
  return detail::unary_op<S>(OpKind::sigmoid, x,
                             [](S v) { return v >= 0 ? S(1) / (S(1) + std::exp(-v)) : std::exp(v) / (S(1) + std::exp(v)); },
                             [](S, S y) { return y * (S(1) - y); });
}

/// ELU with alpha = 1.
template <typename S>
Tensor<S> elu(const Tensor<S>& x) {
  return detail::unary_op<S>(OpKind::elu, x, [](S v) { return v > 0 ? v : std::expm1(v); },
                             [](S v, S y) { return v > 0 ? S(1) : y + S(1); });
}

/// Gradient passes through on the closed interval [lo, hi] (ties included,
/// matching min/max first-argument tie handling).
template <typename S>
Tensor<S> clamp(const Tensor<S>& x, S lo, S hi) {
  if (!(lo <= hi)) throw TensorError("clamp: lo > hi");
  return detail::unary_op<S>(OpKind::clamp, x,
                             [lo, hi](S v) { return v < lo ? lo : (v > hi ? hi : v); },
                             [lo, hi](S v, S) { return (v >= lo && v <= hi) ? S(1) : S(0); });
}

/// Elementwise op with caller-supplied value and derivative functions.
/// Exists so tests can exercise grad_check's negative control and so one-off
/// activations do not need a new op kind.
template <typename S>
Tensor<S> apply_unary(const Tensor<S>& x, std::function<S(S)> f, std::function<S(S)> dfdx) {
  return detail::unary_op<S>(OpKind::custom_unary, x, [&f](S v) { return f(v); },
                             [dfdx](S v, S) { return dfdx(v); });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

namespace detail {

/// Deterministic pairwise-tree sum, independent of traversal chunking.
template <typename S>
S pairwise_sum(const S* d, std::int64_t n) {
  if (n <= 8) {
    S acc = 0;
    for (std::int64_t i = 0; i < n; ++i) acc += d[i];
    return acc;
  }
  const std::int64_t half = n / 2;
  return pairwise_sum(d, half) + pairwise_sum(d + half, n - half);
}

inline void axis_strides(const Shape& shape, int axis, std::int64_t& outer, std::int64_t& extent,
                         std::int64_t& inner) {
  outer = 1;
  for (int i = 0; i < axis; ++i) outer *= shape[static_cast<std::size_t>(i)];
  extent = shape[static_cast<std::size_t>(axis)];
  inner = 1;
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < shape.size(); ++i) inner *= shape[i];
}

inline Shape drop_axis(const Shape& shape, int axis) {
  Shape out;
  for (int i = 0; i < static_cast<int>(shape.size()); ++i)
    if (i != axis) out.push_back(shape[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace detail

/// Sum of all elements -> scalar tensor.
template <typename S>
Tensor<S> sum(const Tensor<S>& x) {
  Tensor<S> out = Tensor<S>::scalar(detail::pairwise_sum(x.data(), x.size()));
  check_finite(out, OpKind::sum);
  if (x.on_tape()) {
    Tape<S>* tape = x.tape();
    const int xn = x.node();
    const Shape xs = x.shape();
    int id = tape->record(OpKind::sum, {xn}, [xn, xs](const Tensor<S>& g, Tape<S>& tp) {
      tp.accumulate(xn, Tensor<S>::full(xs, g[0]));
    });
    out.attach(tape, id);
  }
  return out;
}

template <typename S>
Tensor<S> mean(const Tensor<S>& x) {
  if (x.size() == 0) throw ShapeError("mean of empty tensor");
  const S n = static_cast<S>(x.size());
  Tensor<S> out = Tensor<S>::scalar(detail::pairwise_sum(x.data(), x.size()) / n);
  check_finite(out, OpKind::mean);
  if (x.on_tape()) {
    Tape<S>* tape = x.tape();
    const int xn = x.node();
    const Shape xs = x.shape();
    int id = tape->record(OpKind::mean, {xn}, [xn, xs, n](const Tensor<S>& g, Tape<S>& tp) {
      tp.accumulate(xn, Tensor<S>::full(xs, g[0] / n));
    });
    out.attach(tape, id);
  }
  return out;
}

/// Sum over one axis (shape drops the axis).
template <typename S>
Tensor<S> sum_axis(const Tensor<S>& x, int axis) {
  if (axis < 0 || axis >= x.rank()) throw ShapeError("sum_axis: axis out of range");
  std::int64_t outer, extent, inner;
  detail::axis_strides(x.shape(), axis, outer, extent, inner);
  Tensor<S> out = Tensor<S>::zeros(detail::drop_axis(x.shape(), axis));
  const S* xd = x.data();
  S* od = out.data();
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t e = 0; e < extent; ++e)
      for (std::int64_t i = 0; i < inner; ++i) od[o * inner + i] += xd[(o * extent + e) * inner + i];
  check_finite(out, OpKind::sum);
  if (x.on_tape()) {
    Tape<S>* tape = x.tape();
    const int xn = x.node();
    const Shape xs = x.shape();
    int id = tape->record(OpKind::sum, {xn}, [xn, xs, axis, outer, extent, inner](const Tensor<S>& g, Tape<S>& tp) {
      Tensor<S> gx = Tensor<S>::zeros(xs);
      for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t e = 0; e < extent; ++e)
          for (std::int64_t i = 0; i < inner; ++i) gx[(o * extent + e) * inner + i] = g[o * inner + i];
      tp.accumulate(xn, gx);
    });
    out.attach(tape, id);
  }
  return out;
}

namespace detail {

template <typename S, bool kMax>
Tensor<S> extremum_axis(const Tensor<S>& x, int axis) {
  if (axis < 0 || axis >= x.rank()) throw ShapeError("min/max axis out of range");
  std::int64_t outer, extent, inner;
  axis_strides(x.shape(), axis, outer, extent, inner);
  if (extent == 0) throw ShapeError("min/max over empty axis");
  Tensor<S> out = Tensor<S>::zeros(drop_axis(x.shape(), axis));
  std::vector<std::int64_t> arg(static_cast<std::size_t>(outer * inner), 0);
  const S* xd = x.data();
  S* od = out.data();
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t i = 0; i < inner; ++i) {
      S best = xd[(o * extent) * inner + i];
      std::int64_t bi = 0;
      for (std::int64_t e = 1; e < extent; ++e) {
        const S v = xd[(o * extent + e) * inner + i];
        // strict comparison keeps the first extremum on ties
        if (kMax ? (v > best) : (v < best)) {
          best = v;
          bi = e;
        }
      }
      od[o * inner + i] = best;
      arg[static_cast<std::size_t>(o * inner + i)] = bi;
    }
  const OpKind kind = kMax ? OpKind::max_axis : OpKind::min_axis;
  check_finite(out, kind);
  if (x.on_tape()) {
    Tape<S>* tape = x.tape();
    const int xn = x.node();
    const Shape xs = x.shape();
    int id = tape->record(kind, {xn}, [xn, xs, arg, outer, extent, inner](const Tensor<S>& g, Tape<S>& tp) {
      Tensor<S> gx = Tensor<S>::zeros(xs);
      for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t i = 0; i < inner; ++i) {
          const std::int64_t e = arg[static_cast<std::size_t>(o * inner + i)];
          gx[(o * extent + e) * inner + i] = g[o * inner + i];
        }
      tp.accumulate(xn, gx);
    });
    out.attach(tape, id);
  }
  return out;
}

}  // namespace detail

template <typename S>
Tensor<S> min_axis(const Tensor<S>& x, int axis) {
  return detail::extremum_axis<S, false>(x, axis);
}

template <typename S>
Tensor<S> max_axis(const Tensor<S>& x, int axis) {
  return detail::extremum_axis<S, true>(x, axis);
}

// ---------------------------------------------------------------------------
// Matmul ([m,k] x [k,n]) via Eigen
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0))
    throw ShapeError("matmul: need [m,k] x [k,n], got " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const int m = a.extent(0), k = a.extent(1), n = b.extent(1);
  Tensor<S> out = Tensor<S>::zeros({m, n});
  Eigen::Map<const Mat> A(a.data(), m, k), B(b.data(), k, n);
  Eigen::Map<Mat>(out.data(), m, n) = A * B;
  check_finite(out, OpKind::matmul);
  if (Tape<S>* tape = common_tape<S>({&a, &b})) {
    const int an = a.node(), bn = b.node();
    Tensor<S> av = a.detached(), bv = b.detached();
    int id = tape->record(OpKind::matmul, {an, bn}, [an, bn, av, bv, m, k, n](const Tensor<S>& g, Tape<S>& tp) {
      Eigen::Map<const Mat> G(g.data(), m, n), A2(av.data(), m, k), B2(bv.data(), k, n);
      if (an >= 0) {
        Tensor<S> ga = Tensor<S>::zeros({m, k});
        Eigen::Map<Mat>(ga.data(), m, k) = G * B2.transpose();
        tp.accumulate(an, ga);
      }
      if (bn >= 0) {
        Tensor<S> gb = Tensor<S>::zeros({k, n});
        Eigen::Map<Mat>(gb.data(), k, n) = A2.transpose() * G;
        tp.accumulate(bn, gb);
      }
    });
    out.attach(tape, id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Non-differentiable helpers (always detached)
// ---------------------------------------------------------------------------

/// a < b elementwise -> {0,1} mask, never on the tape.
template <typename S>
Tensor<S> less_than(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape()) throw ShapeError("less_than: shape mismatch");
  Tensor<S> out = Tensor<S>::zeros(a.shape());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] < b[i] ? S(1) : S(0);
  return out;
}

}  // namespace semguide
