// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "semguide/core/ops.hpp"
#include "semguide/core/parallel.hpp"

namespace semguide {

namespace detail {

template <typename S>
void require_rank(const Tensor<S>& t, int rank, const char* who) {
  if (t.rank() != rank)
    throw ShapeError(std::string(who) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_str(t.shape()));
}

// col layout: [C*k*k, outH*outW], row index = (c*k + ky)*k + kx.
template <typename S>
void im2col(const S* x, int C, int H, int W, int k, int stride, int pad, int outH, int outW, S* col) {
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        S* row = col + ((static_cast<std::int64_t>(c) * k + ky) * k + kx) * outH * outW;
        for (int oy = 0; oy < outH; ++oy) {
          const int iy = oy * stride - pad + ky;
          for (int ox = 0; ox < outW; ++ox) {
            const int ix = ox * stride - pad + kx;
            row[static_cast<std::int64_t>(oy) * outW + ox] =
                (iy >= 0 && iy < H && ix >= 0 && ix < W)
                    ? x[(static_cast<std::int64_t>(c) * H + iy) * W + ix]
                    : S(0);
          }
        }
      }
}

template <typename S>
void col2im_add(const S* col, int C, int H, int W, int k, int stride, int pad, int outH, int outW, S* x) {
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const S* row = col + ((static_cast<std::int64_t>(c) * k + ky) * k + kx) * outH * outW;
        for (int oy = 0; oy < outH; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) continue;
          for (int ox = 0; ox < outW; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= W) continue;
            x[(static_cast<std::int64_t>(c) * H + iy) * W + ix] += row[static_cast<std::int64_t>(oy) * outW + ox];
          }
        }
      }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// conv2d: x [N,C,H,W], w [O,C,k,k], bias [O] (optional), zero padding
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& bias, int stride = 1, int pad = 0) {
  detail::require_rank(x, 4, "conv2d input");
  detail::require_rank(w, 4, "conv2d weight");
  const int N = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
  const int O = w.extent(0), k = w.extent(2);
  if (w.extent(1) != C || w.extent(3) != k)
    throw ShapeError("conv2d: weight " + shape_str(w.shape()) + " does not match input channels " +
                     std::to_string(C));
  if (bias.defined() && (bias.rank() != 1 || bias.extent(0) != O))
    throw ShapeError("conv2d: bias must be [O]");
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  const int outH = (H + 2 * pad - k) / stride + 1;
  const int outW = (W + 2 * pad - k) / stride + 1;
  if (outH <= 0 || outW <= 0) throw ShapeError("conv2d: kernel larger than padded input");

  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const std::int64_t ckk = static_cast<std::int64_t>(C) * k * k;
  const std::int64_t ohw = static_cast<std::int64_t>(outH) * outW;

  Tensor<S> out = Tensor<S>::zeros({N, O, outH, outW});
  std::vector<S> col(static_cast<std::size_t>(ckk * ohw));
  Eigen::Map<const Mat> Wm(w.data(), O, ckk);
  for (int n = 0; n < N; ++n) {
    detail::im2col(x.data() + static_cast<std::int64_t>(n) * C * H * W, C, H, W, k, stride, pad, outH, outW,
                   col.data());
    Eigen::Map<const Mat> Cm(col.data(), ckk, ohw);
    Eigen::Map<Mat> Om(out.data() + static_cast<std::int64_t>(n) * O * ohw, O, ohw);
    Om.noalias() = Wm * Cm;
    if (bias.defined())
      for (int o = 0; o < O; ++o) Om.row(o).array() += bias[o];
  }
  check_finite(out, OpKind::conv2d);

  Tape<S>* tape = bias.defined() ? common_tape<S>({&x, &w, &bias}) : common_tape<S>({&x, &w});
  if (tape) {
    const int xn = x.node(), wn = w.node(), bn = bias.defined() ? bias.node() : -1;
    Tensor<S> xv = x.detached(), wv = w.detached();
    int id = tape->record(
        OpKind::conv2d, {xn, wn, bn},
        [=](const Tensor<S>& g, Tape<S>& tp) {
          std::vector<S> col2(static_cast<std::size_t>(ckk * ohw));
          Eigen::Map<const Mat> Wm2(wv.data(), O, ckk);
          Tensor<S> gx = xn >= 0 ? Tensor<S>::zeros(xv.shape()) : Tensor<S>();
          Tensor<S> gw = wn >= 0 ? Tensor<S>::zeros(wv.shape()) : Tensor<S>();
          for (int n = 0; n < N; ++n) {
            Eigen::Map<const Mat> Gm(g.data() + static_cast<std::int64_t>(n) * O * ohw, O, ohw);
            if (wn >= 0) {
              detail::im2col(xv.data() + static_cast<std::int64_t>(n) * C * H * W, C, H, W, k, stride, pad,
                             outH, outW, col2.data());
              Eigen::Map<const Mat> Cm(col2.data(), ckk, ohw);
              Eigen::Map<Mat> Gw(gw.data(), O, ckk);
              Gw.noalias() += Gm * Cm.transpose();
            }
            if (xn >= 0) {
              Eigen::Map<Mat> Cg(col2.data(), ckk, ohw);
              Cg.noalias() = Wm2.transpose() * Gm;
              detail::col2im_add(col2.data(), C, H, W, k, stride, pad, outH, outW,
                                 gx.data() + static_cast<std::int64_t>(n) * C * H * W);
            }
          }
          if (xn >= 0) tp.accumulate(xn, gx);
          if (wn >= 0) tp.accumulate(wn, gw);
          if (bn >= 0) {
            Tensor<S> gb = Tensor<S>::zeros({O});
            for (int n = 0; n < N; ++n)
              for (int o = 0; o < O; ++o)
                gb[o] += detail::pairwise_sum(g.data() + (static_cast<std::int64_t>(n) * O + o) * ohw, ohw);
            tp.accumulate(bn, gb);
          }
        });
    out.attach(tape, id);
  }
  return out;
}

template <typename S>
Tensor<S> conv2d(const Tensor<S>& x, const Tensor<S>& w, int stride = 1, int pad = 0) {
  return conv2d(x, w, Tensor<S>(), stride, pad);
}

// ---------------------------------------------------------------------------
// avg_pool: window k, stride (default k), no padding
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> avg_pool(const Tensor<S>& x, int window, int stride = 0) {
  detail::require_rank(x, 4, "avg_pool input");
  if (stride == 0) stride = window;
  const int N = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
  const int outH = (H - window) / stride + 1, outW = (W - window) / stride + 1;
  if (window < 1 || outH <= 0 || outW <= 0) throw ShapeError("avg_pool: bad window for input");
  Tensor<S> out = Tensor<S>::zeros({N, C, outH, outW});
  const S inv = S(1) / static_cast<S>(window * window);
  const S* xd = x.data();
  S* od = out.data();
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const S* plane = xd + (static_cast<std::int64_t>(n) * C + c) * H * W;
      S* oplane = od + (static_cast<std::int64_t>(n) * C + c) * outH * outW;
      for (int oy = 0; oy < outH; ++oy)
        for (int ox = 0; ox < outW; ++ox) {
          S acc = 0;
          for (int ky = 0; ky < window; ++ky)
            for (int kx = 0; kx < window; ++kx)
              acc += plane[static_cast<std::int64_t>(oy * stride + ky) * W + ox * stride + kx];
          oplane[static_cast<std::int64_t>(oy) * outW + ox] = acc * inv;
        }
    }
  check_finite(out, OpKind::avg_pool);
  if (x.on_tape()) {
    Tape<S>* tape = x.tape();
    const int xn = x.node();
    const Shape xs = x.shape();
    int id = tape->record(OpKind::avg_pool, {xn}, [=](const Tensor<S>& g, Tape<S>& tp) {
      Tensor<S> gx = Tensor<S>::zeros(xs);
      for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
          S* plane = gx.data() + (static_cast<std::int64_t>(n) * C + c) * H * W;
          const S* gplane = g.data() + (static_cast<std::int64_t>(n) * C + c) * outH * outW;
          for (int oy = 0; oy < outH; ++oy)
            for (int ox = 0; ox < outW; ++ox) {
              const S gv = gplane[static_cast<std::int64_t>(oy) * outW + ox] * inv;
              for (int ky = 0; ky < window; ++ky)
                for (int kx = 0; kx < window; ++kx)
                  plane[static_cast<std::int64_t>(oy * stride + ky) * W + ox * stride + kx] += gv;
            }
        }
      tp.accumulate(xn, gx);
    });
    out.attach(tape, id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// upsample_bilinear: integer scale, half-pixel source mapping
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> upsample_bilinear(const Tensor<S>& x, int scale) {
  detail::require_rank(x, 4, "upsample_bilinear input");
  if (scale < 1) throw ShapeError("upsample_bilinear: scale must be >= 1");
  const int N = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
  const int outH = H * scale, outW = W * scale;

  // Precompute per-row / per-column taps (index pair + weight), shared by
  // forward and backward so the transpose is exact.
  struct Tap {
    int i0, i1;
    S w1;
  };
  auto make_taps = [scale](int out_n, int in_n) {
    std::vector<Tap> taps(static_cast<std::size_t>(out_n));
    for (int i = 0; i < out_n; ++i) {
      const double src = (i + 0.5) / scale - 0.5;
      int i0 = static_cast<int>(std::floor(src));
      S f = static_cast<S>(src - i0);
      int i1 = i0 + 1;
      if (i0 < 0) i0 = 0;
      if (i1 > in_n - 1) i1 = in_n - 1;
      if (i0 > in_n - 1) i0 = in_n - 1;
      taps[static_cast<std::size_t>(i)] = {i0, i1, f};
    }
    return taps;
  };
  const auto ytaps = make_taps(outH, H);
  const auto xtaps = make_taps(outW, W);

  Tensor<S> out = Tensor<S>::zeros({N, C, outH, outW});
  const S* xd = x.data();
  S* od = out.data();
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const S* plane = xd + (static_cast<std::int64_t>(n) * C + c) * H * W;
      S* oplane = od + (static_cast<std::int64_t>(n) * C + c) * outH * outW;
      for (int oy = 0; oy < outH; ++oy) {
        const Tap& ty = ytaps[static_cast<std::size_t>(oy)];
        for (int ox = 0; ox < outW; ++ox) {
          const Tap& tx = xtaps[static_cast<std::size_t>(ox)];
          const S v00 = plane[static_cast<std::int64_t>(ty.i0) * W + tx.i0];
          const S v01 = plane[static_cast<std::int64_t>(ty.i0) * W + tx.i1];
          const S v10 = plane[static_cast<std::int64_t>(ty.i1) * W + tx.i0];
          const S v11 = plane[static_cast<std::int64_t>(ty.i1) * W + tx.i1];
          oplane[static_cast<std::int64_t>(oy) * outW + ox] =
              (S(1) - ty.w1) * ((S(1) - tx.w1) * v00 + tx.w1 * v01) +
              ty.w1 * ((S(1) - tx.w1) * v10 + tx.w1 * v11);
        }
      }
    }
  check_finite(out, OpKind::upsample_bilinear);
  if (x.on_tape()) {
    Tape<S>* tape = x.tape();
    const int xn = x.node();
    const Shape xs = x.shape();
    int id = tape->record(OpKind::upsample_bilinear, {xn}, [=](const Tensor<S>& g, Tape<S>& tp) {
      Tensor<S> gx = Tensor<S>::zeros(xs);
      for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
          S* plane = gx.data() + (static_cast<std::int64_t>(n) * C + c) * H * W;
          const S* gplane = g.data() + (static_cast<std::int64_t>(n) * C + c) * outH * outW;
          for (int oy = 0; oy < outH; ++oy) {
            const Tap& ty = ytaps[static_cast<std::size_t>(oy)];
            for (int ox = 0; ox < outW; ++ox) {
              const Tap& tx = xtaps[static_cast<std::size_t>(ox)];
              const S gv = gplane[static_cast<std::int64_t>(oy) * outW + ox];
              plane[static_cast<std::int64_t>(ty.i0) * W + tx.i0] += (S(1) - ty.w1) * (S(1) - tx.w1) * gv;
              plane[static_cast<std::int64_t>(ty.i0) * W + tx.i1] += (S(1) - ty.w1) * tx.w1 * gv;
              plane[static_cast<std::int64_t>(ty.i1) * W + tx.i0] += ty.w1 * (S(1) - tx.w1) * gv;
              plane[static_cast<std::int64_t>(ty.i1) * W + tx.i1] += ty.w1 * tx.w1 * gv;
            }
          }
        }
      tp.accumulate(xn, gx);
    });
    out.attach(tape, id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// group_norm: x [N,C,H,W], affine gamma/beta [C], eps 1e-5
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> group_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta, int groups) {
  detail::require_rank(x, 4, "group_norm input");
  const int N = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
  if (groups < 1 || C % groups != 0)
    throw ShapeError("group_norm: group count " + std::to_string(groups) + " must divide channels " +
                     std::to_string(C));
  if (gamma.rank() != 1 || gamma.extent(0) != C || beta.rank() != 1 || beta.extent(0) != C)
    throw ShapeError("group_norm: gamma/beta must be [C]");
  const S eps = S(1e-5);
  const int cg = C / groups;
  const std::int64_t gsize = static_cast<std::int64_t>(cg) * H * W;

  Tensor<S> out = Tensor<S>::zeros(x.shape());
  Tensor<S> xhat = Tensor<S>::zeros(x.shape());
  std::vector<S> ivars(static_cast<std::size_t>(N) * groups);
  const S* xd = x.data();
  S* od = out.data();
  S* hd = xhat.data();
  for (int n = 0; n < N; ++n)
    for (int g = 0; g < groups; ++g) {
      const S* base = xd + (static_cast<std::int64_t>(n) * C + g * cg) * H * W;
      const S mu = detail::pairwise_sum(base, gsize) / static_cast<S>(gsize);
      S var = 0;
      for (std::int64_t i = 0; i < gsize; ++i) {
        const S d = base[i] - mu;
        var += d * d;
      }
      var /= static_cast<S>(gsize);
      const S ivar = S(1) / std::sqrt(var + eps);
      ivars[static_cast<std::size_t>(n) * groups + g] = ivar;
      for (int c = 0; c < cg; ++c) {
        const int ch = g * cg + c;
        const std::int64_t off = (static_cast<std::int64_t>(n) * C + ch) * H * W;
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(H) * W; ++i) {
          const S h = (xd[off + i] - mu) * ivar;
          hd[off + i] = h;
          od[off + i] = gamma[ch] * h + beta[ch];
        }
      }
    }
  check_finite(out, OpKind::group_norm);

  if (Tape<S>* tape = common_tape<S>({&x, &gamma, &beta})) {
    const int xn = x.node(), gn = gamma.node(), bn = beta.node();
    Tensor<S> gv = gamma.detached();
    int id = tape->record(OpKind::group_norm, {xn, gn, bn}, [=](const Tensor<S>& g, Tape<S>& tp) {
      const std::int64_t hw = static_cast<std::int64_t>(H) * W;
      if (gn >= 0 || bn >= 0) {
        Tensor<S> dgamma = Tensor<S>::zeros({C});
        Tensor<S> dbeta = Tensor<S>::zeros({C});
        for (int n = 0; n < N; ++n)
          for (int c = 0; c < C; ++c) {
            const std::int64_t off = (static_cast<std::int64_t>(n) * C + c) * hw;
            for (std::int64_t i = 0; i < hw; ++i) {
              dgamma[c] += g[off + i] * xhat[off + i];
              dbeta[c] += g[off + i];
            }
          }
        if (gn >= 0) tp.accumulate(gn, dgamma);
        if (bn >= 0) tp.accumulate(bn, dbeta);
      }
      if (xn >= 0) {
        Tensor<S> gx = Tensor<S>::zeros({N, C, H, W});
        for (int n = 0; n < N; ++n)
          for (int gi = 0; gi < groups; ++gi) {
            // dxhat = g * gamma; dx = ivar/m * (m*dxhat - sum(dxhat) - xhat*sum(dxhat*xhat))
            S sh = 0, shh = 0;
            for (int c = 0; c < cg; ++c) {
              const int ch = gi * cg + c;
              const std::int64_t off = (static_cast<std::int64_t>(n) * C + ch) * hw;
              for (std::int64_t i = 0; i < hw; ++i) {
                const S dh = g[off + i] * gv[ch];
                sh += dh;
                shh += dh * xhat[off + i];
              }
            }
            const S ivar = ivars[static_cast<std::size_t>(n) * groups + gi];
            const S m = static_cast<S>(gsize);
            for (int c = 0; c < cg; ++c) {
              const int ch = gi * cg + c;
              const std::int64_t off = (static_cast<std::int64_t>(n) * C + ch) * hw;
              for (std::int64_t i = 0; i < hw; ++i) {
                const S dh = g[off + i] * gv[ch];
                gx[off + i] = ivar / m * (m * dh - sh - xhat[off + i] * shh);
              }
            }
          }
        tp.accumulate(xn, gx);
      }
    });
    out.attach(tape, id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// concat / slice / reshape
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> concat(const std::vector<Tensor<S>>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: empty input list");
  const int rank = parts[0].rank();
  if (axis < 0 || axis >= rank) throw ShapeError("concat: axis out of range");
  Shape out_shape = parts[0].shape();
  for (std::size_t p = 1; p < parts.size(); ++p) {
    if (parts[p].rank() != rank) throw ShapeError("concat: rank mismatch");
    for (int d = 0; d < rank; ++d)
      if (d != axis && parts[p].extent(d) != out_shape[static_cast<std::size_t>(d)])
        throw ShapeError("concat: extent mismatch off the concat axis");
    out_shape[static_cast<std::size_t>(axis)] += parts[p].extent(axis);
  }
  std::int64_t outer, total_extent, inner;
  detail::axis_strides(out_shape, axis, outer, total_extent, inner);
  Tensor<S> out = Tensor<S>::zeros(out_shape);
  std::int64_t offset = 0;
  for (const Tensor<S>& p : parts) {
    const std::int64_t e = p.extent(axis);
    for (std::int64_t o = 0; o < outer; ++o)
      std::copy_n(p.data() + o * e * inner, e * inner, out.data() + (o * total_extent + offset) * inner);
    offset += e;
  }
  check_finite(out, OpKind::concat);

  Tape<S>* tape = nullptr;
  for (const Tensor<S>& p : parts)
    if (p.on_tape()) {
      if (tape && tape != p.tape()) throw TensorError("concat: inputs on different tapes");
      tape = p.tape();
    }
  if (tape) {
    std::vector<int> nodes;
    std::vector<std::int64_t> extents;
    for (const Tensor<S>& p : parts) {
      nodes.push_back(p.node());
      extents.push_back(p.extent(axis));
    }
    std::vector<Shape> shapes;
    for (const Tensor<S>& p : parts) shapes.push_back(p.shape());
    int id = tape->record(OpKind::concat, nodes, [=](const Tensor<S>& g, Tape<S>& tp) {
      std::int64_t off = 0;
      for (std::size_t p = 0; p < nodes.size(); ++p) {
        const std::int64_t e = extents[p];
        if (nodes[p] >= 0) {
          Tensor<S> gp = Tensor<S>::zeros(shapes[p]);
          for (std::int64_t o = 0; o < outer; ++o)
            std::copy_n(g.data() + (o * total_extent + off) * inner, e * inner, gp.data() + o * e * inner);
          tp.accumulate(nodes[p], gp);
        }
        off += e;
      }
    });
    out.attach(tape, id);
  }
  return out;
}

/// Copy of x[..., start:end, ...] along `axis` (end exclusive).
template <typename S>
Tensor<S> slice(const Tensor<S>& x, int axis, int start, int end) {
  if (axis < 0 || axis >= x.rank()) throw ShapeError("slice: axis out of range");
  if (start < 0 || end > x.extent(axis) || start >= end) throw ShapeError("slice: bad range");
  std::int64_t outer, extent, inner;
  detail::axis_strides(x.shape(), axis, outer, extent, inner);
  Shape out_shape = x.shape();
  out_shape[static_cast<std::size_t>(axis)] = end - start;
  Tensor<S> out = Tensor<S>::zeros(out_shape);
  const std::int64_t e = end - start;
  for (std::int64_t o = 0; o < outer; ++o)
    std::copy_n(x.data() + (o * extent + start) * inner, e * inner, out.data() + o * e * inner);
  if (x.on_tape()) {
    Tape<S>* tape = x.tape();
    const int xn = x.node();
    const Shape xs = x.shape();
    int id = tape->record(OpKind::slice, {xn}, [=](const Tensor<S>& g, Tape<S>& tp) {
      Tensor<S> gx = Tensor<S>::zeros(xs);
      for (std::int64_t o = 0; o < outer; ++o)
        std::copy_n(g.data() + o * e * inner, e * inner, gx.data() + (o * extent + start) * inner);
      tp.accumulate(xn, gx);
    });
    out.attach(tape, id);
  }
  return out;
}

template <typename S>
Tensor<S> reshape(const Tensor<S>& x, Shape new_shape) {
  if (shape_numel(new_shape) != x.size())
    throw ShapeError("reshape: size mismatch " + shape_str(x.shape()) + " -> " + shape_str(new_shape));
  Tensor<S> out(new_shape, std::make_shared<std::vector<S>>(x.values()));
  if (x.on_tape()) {
    Tape<S>* tape = x.tape();
    const int xn = x.node();
    const Shape xs = x.shape();
    int id = tape->record(OpKind::reshape, {xn}, [xn, xs](const Tensor<S>& g, Tape<S>& tp) {
      tp.accumulate(xn, Tensor<S>(xs, std::make_shared<std::vector<S>>(g.values())));
    });
    out.attach(tape, id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spatial forward differences over the trailing two axes
// ---------------------------------------------------------------------------

namespace detail {

template <typename S, bool kAlongX>
Tensor<S> spatial_gradient(const Tensor<S>& t) {
  if (t.rank() < 2) throw ShapeError("spatial_gradient: rank must be >= 2");
  const int rank = t.rank();
  const int H = t.extent(rank - 2), W = t.extent(rank - 1);
  std::int64_t planes = t.size() / (static_cast<std::int64_t>(H) * W);
  Shape out_shape = t.shape();
  if (kAlongX) out_shape[static_cast<std::size_t>(rank - 1)] = W - 1;
  else out_shape[static_cast<std::size_t>(rank - 2)] = H - 1;
  if ((kAlongX && W < 2) || (!kAlongX && H < 2)) throw ShapeError("spatial_gradient: extent too small");
  Tensor<S> out = Tensor<S>::zeros(out_shape);
  const int oH = kAlongX ? H : H - 1, oW = kAlongX ? W - 1 : W;
  const S* xd = t.data();
  S* od = out.data();
  for (std::int64_t p = 0; p < planes; ++p) {
    const S* in = xd + p * H * W;
    S* o = od + p * static_cast<std::int64_t>(oH) * oW;
    for (int y = 0; y < oH; ++y)
      for (int x = 0; x < oW; ++x)
        o[static_cast<std::int64_t>(y) * oW + x] =
            kAlongX ? in[static_cast<std::int64_t>(y) * W + x + 1] - in[static_cast<std::int64_t>(y) * W + x]
                    : in[static_cast<std::int64_t>(y + 1) * W + x] - in[static_cast<std::int64_t>(y) * W + x];
  }
  const OpKind kind = kAlongX ? OpKind::spatial_gradient_x : OpKind::spatial_gradient_y;
  check_finite(out, kind);
  if (t.on_tape()) {
    Tape<S>* tape = t.tape();
    const int xn = t.node();
    const Shape xs = t.shape();
    int id = tape->record(kind, {xn}, [=](const Tensor<S>& g, Tape<S>& tp) {
      Tensor<S> gx = Tensor<S>::zeros(xs);
      for (std::int64_t p = 0; p < planes; ++p) {
        const S* gp = g.data() + p * static_cast<std::int64_t>(oH) * oW;
        S* xp = gx.data() + p * H * W;
        for (int y = 0; y < oH; ++y)
          for (int x = 0; x < oW; ++x) {
            const S gv = gp[static_cast<std::int64_t>(y) * oW + x];
            if (kAlongX) {
              xp[static_cast<std::int64_t>(y) * W + x + 1] += gv;
              xp[static_cast<std::int64_t>(y) * W + x] -= gv;
            } else {
              xp[static_cast<std::int64_t>(y + 1) * W + x] += gv;
              xp[static_cast<std::int64_t>(y) * W + x] -= gv;
            }
          }
      }
      tp.accumulate(xn, gx);
    });
    out.attach(tape, id);
  }
  return out;
}

}  // namespace detail

template <typename S>
Tensor<S> spatial_gradient_x(const Tensor<S>& t) {
  return detail::spatial_gradient<S, true>(t);
}

template <typename S>
Tensor<S> spatial_gradient_y(const Tensor<S>& t) {
  return detail::spatial_gradient<S, false>(t);
}

// ---------------------------------------------------------------------------
// bilinear_sample: src [N,C,H,W], grid [N,H',W',2] in pixel coords (x,y)
// ---------------------------------------------------------------------------

template <typename S>
struct SampleResult {
  Tensor<S> values;  // [N,C,H',W']
  Tensor<S> mask;    // [N,H',W'], 1 where the sample point lies inside the image
};

/// Out-of-bounds sample points (outside the closed box [0,W-1]x[0,H-1])
/// return 0 with mask 0 and propagate no gradient. Differentiable w.r.t.
/// both src and grid elsewhere.
template <typename S>
SampleResult<S> bilinear_sample(const Tensor<S>& src, const Tensor<S>& grid) {
  detail::require_rank(src, 4, "bilinear_sample src");
  detail::require_rank(grid, 4, "bilinear_sample grid");
  const int N = src.extent(0), C = src.extent(1), H = src.extent(2), W = src.extent(3);
  if (grid.extent(0) != N || grid.extent(3) != 2)
    throw ShapeError("bilinear_sample: grid must be [N,H',W',2]");
  const int outH = grid.extent(1), outW = grid.extent(2);
  const std::int64_t ohw = static_cast<std::int64_t>(outH) * outW;

  Tensor<S> out = Tensor<S>::zeros({N, C, outH, outW});
  Tensor<S> mask = Tensor<S>::zeros({N, outH, outW});
  const S* sd = src.data();
  const S* gd = grid.data();
  S* od = out.data();
  S* md = mask.data();
  for (int n = 0; n < N; ++n) {
    parallel_for(ohw, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t p = lo; p < hi; ++p) {
        const S gx = gd[(n * ohw + p) * 2 + 0];
        const S gy = gd[(n * ohw + p) * 2 + 1];
        if (!(gx >= 0 && gx <= S(W - 1) && gy >= 0 && gy <= S(H - 1))) continue;
        md[n * ohw + p] = S(1);
        const int x0 = static_cast<int>(std::floor(gx)), y0 = static_cast<int>(std::floor(gy));
        const S fx = gx - static_cast<S>(x0), fy = gy - static_cast<S>(y0);
        const int x1 = x0 + 1, y1 = y0 + 1;
        for (int c = 0; c < C; ++c) {
          const S* plane = sd + (static_cast<std::int64_t>(n) * C + c) * H * W;
          const S v00 = plane[static_cast<std::int64_t>(y0) * W + x0];
          const S v01 = x1 < W ? plane[static_cast<std::int64_t>(y0) * W + x1] : S(0);
          const S v10 = y1 < H ? plane[static_cast<std::int64_t>(y1) * W + x0] : S(0);
          const S v11 = (x1 < W && y1 < H) ? plane[static_cast<std::int64_t>(y1) * W + x1] : S(0);
          od[(static_cast<std::int64_t>(n) * C + c) * ohw + p] =
              (S(1) - fy) * ((S(1) - fx) * v00 + fx * v01) + fy * ((S(1) - fx) * v10 + fx * v11);
        }
      }
    });
  }
  check_finite(out, OpKind::bilinear_sample);

  if (Tape<S>* tape = common_tape<S>({&src, &grid})) {
    const int sn = src.node(), gn = grid.node();
    Tensor<S> sv = src.detached(), gv = grid.detached();
    int id = tape->record(OpKind::bilinear_sample, {sn, gn}, [=](const Tensor<S>& g, Tape<S>& tp) {
      Tensor<S> gsrc = sn >= 0 ? Tensor<S>::zeros(sv.shape()) : Tensor<S>();
      Tensor<S> ggrid = gn >= 0 ? Tensor<S>::zeros(gv.shape()) : Tensor<S>();
      for (int n = 0; n < N; ++n)
        for (std::int64_t p = 0; p < ohw; ++p) {
          const S gx = gv[(n * ohw + p) * 2 + 0];
          const S gy = gv[(n * ohw + p) * 2 + 1];
          if (!(gx >= 0 && gx <= S(W - 1) && gy >= 0 && gy <= S(H - 1))) continue;
          const int x0 = static_cast<int>(std::floor(gx)), y0 = static_cast<int>(std::floor(gy));
          const S fx = gx - static_cast<S>(x0), fy = gy - static_cast<S>(y0);
          const int x1 = x0 + 1, y1 = y0 + 1;
          S dx_acc = 0, dy_acc = 0;
          for (int c = 0; c < C; ++c) {
            const std::int64_t pl = (static_cast<std::int64_t>(n) * C + c) * H * W;
            const S gout = g[(static_cast<std::int64_t>(n) * C + c) * ohw + p];
            const S v00 = sv[pl + static_cast<std::int64_t>(y0) * W + x0];
            const S v01 = x1 < W ? sv[pl + static_cast<std::int64_t>(y0) * W + x1] : S(0);
            const S v10 = y1 < H ? sv[pl + static_cast<std::int64_t>(y1) * W + x0] : S(0);
            const S v11 = (x1 < W && y1 < H) ? sv[pl + static_cast<std::int64_t>(y1) * W + x1] : S(0);
            if (sn >= 0) {
              gsrc[pl + static_cast<std::int64_t>(y0) * W + x0] += gout * (S(1) - fy) * (S(1) - fx);
              if (x1 < W) gsrc[pl + static_cast<std::int64_t>(y0) * W + x1] += gout * (S(1) - fy) * fx;
              if (y1 < H) gsrc[pl + static_cast<std::int64_t>(y1) * W + x0] += gout * fy * (S(1) - fx);
              if (x1 < W && y1 < H) gsrc[pl + static_cast<std::int64_t>(y1) * W + x1] += gout * fy * fx;
            }
            dx_acc += gout * ((S(1) - fy) * (v01 - v00) + fy * (v11 - v10));
            dy_acc += gout * ((S(1) - fx) * (v10 - v00) + fx * (v11 - v01));
          }
          if (gn >= 0) {
            ggrid[(n * ohw + p) * 2 + 0] = dx_acc;
            ggrid[(n * ohw + p) * 2 + 1] = dy_acc;
          }
        }
      if (sn >= 0) tp.accumulate(sn, gsrc);
      if (gn >= 0) tp.accumulate(gn, ggrid);
    });
    out.attach(tape, id);
  }
  return {out, mask};
}

}  // namespace semguide
