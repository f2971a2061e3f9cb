// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "semguide/core/nn_ops.hpp"
#include "semguide/core/ops.hpp"

namespace semguide::pac {

/// exp(-|fi - fj|^2 / (2 sigma^2)): the Gaussian correlation between two
/// guidance feature vectors, diagonal covariance sigma^2 I.
template <typename S>
S gaussian_kernel(const std::vector<S>& fi, const std::vector<S>& fj, S sigma) {
  if (fi.size() != fj.size()) throw ShapeError("gaussian_kernel: feature lengths differ");
  if (!(sigma > 0)) throw TensorError("gaussian_kernel: sigma must be positive");
  S d2 = 0;
  for (std::size_t i = 0; i < fi.size(); ++i) {
    const S d = fi[i] - fj[i];
    d2 += d * d;
  }
  return std::exp(-d2 / (2 * sigma * sigma));
}

/// Spatial filter of a pixel-adaptive convolution. Bandwidths are stored as
/// log(sigma), one per output filter, so positivity holds by construction.
template <typename S>
struct PacParams {
  Tensor<S> weight;     // [O,C,k,k]
  Tensor<S> bias;       // [O]
  Tensor<S> log_sigma;  // [O]
};

namespace detail {

// Tap-major column layout: row = tap * C + c, so all channels of one tap are
// a contiguous [C, HW] block (what the per-tap GEMMs want).
template <typename S>
void im2col_tapmajor(const S* x, int C, int H, int W, int k, int pad, S* col) {
  const std::int64_t hw = static_cast<std::int64_t>(H) * W;
  for (int ky = 0; ky < k; ++ky)
    for (int kx = 0; kx < k; ++kx) {
      const int tap = ky * k + kx;
      for (int c = 0; c < C; ++c) {
        S* row = col + (static_cast<std::int64_t>(tap) * C + c) * hw;
        const S* plane = x + static_cast<std::int64_t>(c) * hw;
        for (int y = 0; y < H; ++y) {
          const int iy = y - pad + ky;
          for (int x2 = 0; x2 < W; ++x2) {
            const int ix = x2 - pad + kx;
            row[static_cast<std::int64_t>(y) * W + x2] =
                (iy >= 0 && iy < H && ix >= 0 && ix < W) ? plane[static_cast<std::int64_t>(iy) * W + ix]
                                                         : S(0);
          }
        }
      }
    }
}

template <typename S>
void col2im_tapmajor_add(const S* col, int C, int H, int W, int k, int pad, S* x) {
  const std::int64_t hw = static_cast<std::int64_t>(H) * W;
  for (int ky = 0; ky < k; ++ky)
    for (int kx = 0; kx < k; ++kx) {
      const int tap = ky * k + kx;
      for (int c = 0; c < C; ++c) {
        const S* row = col + (static_cast<std::int64_t>(tap) * C + c) * hw;
        S* plane = x + static_cast<std::int64_t>(c) * hw;
        for (int y = 0; y < H; ++y) {
          const int iy = y - pad + ky;
          if (iy < 0 || iy >= H) continue;
          for (int x2 = 0; x2 < W; ++x2) {
            const int ix = x2 - pad + kx;
            if (ix < 0 || ix >= W) continue;
            plane[static_cast<std::int64_t>(iy) * W + ix] += row[static_cast<std::int64_t>(y) * W + x2];
          }
        }
      }
    }
}

}  // namespace detail

/// v'_i = sum_{j in window(i)} K(f_i, f_j) W[p_i - p_j] v_j + b, stride 1,
/// zero padding of k/2 so the output keeps the input resolution. Guidance
/// at padded positions acts as f_i itself (K = 1 there), which together with
/// the zero-padded signal reproduces standard convolution exactly in the
/// constant-guidance case. Differentiable w.r.t. v, f, W, b and log sigma.
template <typename S>
Tensor<S> pac_forward(const Tensor<S>& v, const Tensor<S>& f, const PacParams<S>& params) {
  const Tensor<S>& weight = params.weight;
  const Tensor<S>& bias = params.bias;
  const Tensor<S>& log_sigma = params.log_sigma;
  if (v.rank() != 4 || f.rank() != 4) throw ShapeError("pac_forward: v and f must be [N,*,H,W]");
  const int N = v.extent(0), C = v.extent(1), H = v.extent(2), W = v.extent(3);
  const int D = f.extent(1);
  if (f.extent(0) != N || f.extent(2) != H || f.extent(3) != W)
    throw ShapeError("pac_forward: guidance extents must match the signal");
  if (weight.rank() != 4 || weight.extent(1) != C || weight.extent(2) != weight.extent(3))
    throw ShapeError("pac_forward: weight must be [O,C,k,k]");
  const int O = weight.extent(0), k = weight.extent(2);
  if (k % 2 == 0) throw ShapeError("pac_forward: kernel size must be odd");
  if (bias.size() != O || log_sigma.size() != O)
    throw ShapeError("pac_forward: bias/log_sigma must be [O]");
  const int pad = k / 2;
  const int taps = k * k;
  const std::int64_t hw = static_cast<std::int64_t>(H) * W;

  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using ArrX = Eigen::Array<S, Eigen::Dynamic, 1>;

  // s_o = 1 / (2 sigma_o^2)
  std::vector<S> s(static_cast<std::size_t>(O));
  for (int o = 0; o < O; ++o) s[static_cast<std::size_t>(o)] = std::exp(S(-2) * log_sigma[o]) / S(2);

  Tensor<S> out = Tensor<S>::zeros({N, O, H, W});
  Tensor<S> kernels = Tensor<S>::zeros({N, O, taps, static_cast<int>(hw)});  // saved for backward
  Tensor<S> dist2 = Tensor<S>::zeros({N, taps, static_cast<int>(hw)});

  std::vector<S> colV(static_cast<std::size_t>(C) * taps * hw);
  std::vector<S> colF(static_cast<std::size_t>(D) * taps * hw);
  std::vector<S> wtap(static_cast<std::size_t>(O) * C);
  std::vector<S> tapresp(static_cast<std::size_t>(O) * hw);

  for (int n = 0; n < N; ++n) {
    const S* vn = v.data() + static_cast<std::int64_t>(n) * C * hw;
    const S* fn = f.data() + static_cast<std::int64_t>(n) * D * hw;
    detail::im2col_tapmajor(vn, C, H, W, k, pad, colV.data());
    detail::im2col_tapmajor(fn, D, H, W, k, pad, colF.data());

    S* d2n = dist2.data() + static_cast<std::int64_t>(n) * taps * hw;
    for (int tap = 0; tap < taps; ++tap) {
      Eigen::Map<ArrX> d2(d2n + static_cast<std::int64_t>(tap) * hw, hw);
      d2.setZero();
      for (int d = 0; d < D; ++d) {
        Eigen::Map<const ArrX> fc(fn + static_cast<std::int64_t>(d) * hw, hw);
        Eigen::Map<const ArrX> fs(colF.data() + (static_cast<std::int64_t>(tap) * D + d) * hw, hw);
        d2 += (fc - fs).square();
      }
    }

    S* outn = out.data() + static_cast<std::int64_t>(n) * O * hw;
    S* kern = kernels.data() + static_cast<std::int64_t>(n) * O * taps * hw;
    for (int o = 0; o < O; ++o)
      Eigen::Map<ArrX>(outn + static_cast<std::int64_t>(o) * hw, hw).setConstant(bias[o]);
    for (int tap = 0; tap < taps; ++tap) {
      // per-tap channel mix: tapresp = W[:,:,tap] (O x C) * colV_tap (C x HW)
      for (int o = 0; o < O; ++o)
        for (int c = 0; c < C; ++c)
          wtap[static_cast<std::size_t>(o) * C + c] =
              weight[((static_cast<std::int64_t>(o) * C + c) * taps) + tap];
      Eigen::Map<const Mat> Wt(wtap.data(), O, C);
      Eigen::Map<const Mat> Ct(colV.data() + static_cast<std::int64_t>(tap) * C * hw, C, hw);
      Eigen::Map<Mat> Tt(tapresp.data(), O, hw);
      Tt.noalias() = Wt * Ct;
      Eigen::Map<const ArrX> d2(d2n + static_cast<std::int64_t>(tap) * hw, hw);
      for (int o = 0; o < O; ++o) {
        Eigen::Map<ArrX> Ko(kern + (static_cast<std::int64_t>(o) * taps + tap) * hw, hw);
        Ko = (-s[static_cast<std::size_t>(o)] * d2).exp();
        Eigen::Map<ArrX>(outn + static_cast<std::int64_t>(o) * hw, hw) +=
            Ko * Eigen::Map<const ArrX>(tapresp.data() + static_cast<std::int64_t>(o) * hw, hw);
      }
    }
  }
  check_finite(out, OpKind::pac);

  Tape<S>* tape = common_tape<S>({&v, &f, &weight, &bias, &log_sigma});
  if (tape) {
    const int vn_id = v.node(), fn_id = f.node(), wn_id = weight.node(), bn_id = bias.node(),
              sn_id = log_sigma.node();
    Tensor<S> vv = v.detached(), fv = f.detached(), wv = weight.detached();
    int id = tape->record(
        OpKind::pac, {vn_id, fn_id, wn_id, bn_id, sn_id}, [=](const Tensor<S>& g, Tape<S>& tp) {
          std::vector<S> colV2(static_cast<std::size_t>(C) * taps * hw);
          std::vector<S> colF2(static_cast<std::size_t>(D) * taps * hw);
          std::vector<S> wtap2(static_cast<std::size_t>(O) * C);
          std::vector<S> tapresp2(static_cast<std::size_t>(O) * hw);
          std::vector<S> gk(static_cast<std::size_t>(O) * hw);   // g * K for one tap
          std::vector<S> colG(static_cast<std::size_t>(C) * taps * hw);
          std::vector<S> wsum(static_cast<std::size_t>(hw));     // sum_o gK * 2 s_o K

          Tensor<S> gv = vn_id >= 0 ? Tensor<S>::zeros(vv.shape()) : Tensor<S>();
          Tensor<S> gf = fn_id >= 0 ? Tensor<S>::zeros(fv.shape()) : Tensor<S>();
          Tensor<S> gw = wn_id >= 0 ? Tensor<S>::zeros(wv.shape()) : Tensor<S>();
          Tensor<S> gb = bn_id >= 0 ? Tensor<S>::zeros({O}) : Tensor<S>();
          Tensor<S> gs = sn_id >= 0 ? Tensor<S>::zeros({O}) : Tensor<S>();

          for (int n = 0; n < N; ++n) {
            const S* vn2 = vv.data() + static_cast<std::int64_t>(n) * C * hw;
            const S* fn2 = fv.data() + static_cast<std::int64_t>(n) * D * hw;
            const S* gn = g.data() + static_cast<std::int64_t>(n) * O * hw;
            const S* kern = kernels.data() + static_cast<std::int64_t>(n) * O * taps * hw;
            const S* d2n = dist2.data() + static_cast<std::int64_t>(n) * taps * hw;
            detail::im2col_tapmajor(vn2, C, H, W, k, pad, colV2.data());
            detail::im2col_tapmajor(fn2, D, H, W, k, pad, colF2.data());

            if (bn_id >= 0)
              for (int o = 0; o < O; ++o)
                gb[o] += semguide::detail::pairwise_sum(gn + static_cast<std::int64_t>(o) * hw, hw);

            for (int tap = 0; tap < taps; ++tap) {
              for (int o = 0; o < O; ++o)
                for (int c = 0; c < C; ++c)
                  wtap2[static_cast<std::size_t>(o) * C + c] =
                      wv[((static_cast<std::int64_t>(o) * C + c) * taps) + tap];
              // gK = g ⊙ K
              for (int o = 0; o < O; ++o) {
                Eigen::Map<const ArrX> Ko(kern + (static_cast<std::int64_t>(o) * taps + tap) * hw, hw);
                Eigen::Map<const ArrX> Go(gn + static_cast<std::int64_t>(o) * hw, hw);
                Eigen::Map<ArrX>(gk.data() + static_cast<std::int64_t>(o) * hw, hw) = Go * Ko;
              }
              Eigen::Map<const Mat> GK(gk.data(), O, hw);
              if (wn_id >= 0) {
                // dW[:,:,tap] += GK * colV_tap^T
                Eigen::Map<const Mat> Ct(colV2.data() + static_cast<std::int64_t>(tap) * C * hw, C, hw);
                Mat dwt = GK * Ct.transpose();
                for (int o = 0; o < O; ++o)
                  for (int c = 0; c < C; ++c)
                    gw[((static_cast<std::int64_t>(o) * C + c) * taps) + tap] += dwt(o, c);
              }
              if (vn_id >= 0) {
                // colG_tap = W_tap^T * GK, scattered back by col2im
                Eigen::Map<const Mat> Wt(wtap2.data(), O, C);
                Eigen::Map<Mat> Cg(colG.data() + static_cast<std::int64_t>(tap) * C * hw, C, hw);
                Cg.noalias() = Wt.transpose() * GK;
              }
              if (sn_id >= 0 || fn_id >= 0) {
                // gKker = g ⊙ tap response (recomputed); weight by dK/d(.)
                Eigen::Map<const Mat> Wt(wtap2.data(), O, C);
                Eigen::Map<const Mat> Ct(colV2.data() + static_cast<std::int64_t>(tap) * C * hw, C, hw);
                Eigen::Map<Mat> Tt(tapresp2.data(), O, hw);
                Tt.noalias() = Wt * Ct;
                Eigen::Map<const ArrX> d2(d2n + static_cast<std::int64_t>(tap) * hw, hw);
                Eigen::Map<ArrX> wmap(wsum.data(), hw);
                wmap.setZero();
                for (int o = 0; o < O; ++o) {
                  Eigen::Map<const ArrX> Ko(kern + (static_cast<std::int64_t>(o) * taps + tap) * hw, hw);
                  Eigen::Map<const ArrX> Go(gn + static_cast<std::int64_t>(o) * hw, hw);
                  Eigen::Map<const ArrX> To(tapresp2.data() + static_cast<std::int64_t>(o) * hw, hw);
                  const S so = s[static_cast<std::size_t>(o)];
                  if (sn_id >= 0) gs[o] += (Go * To * Ko * d2).sum() * S(2) * so;
                  if (fn_id >= 0) wmap += Go * To * Ko * (S(2) * so);
                }
                if (fn_id >= 0) {
                  // df_i -= w (f_i - f_j); df_j += w (f_i - f_j)
                  const int ky = tap / k, kx = tap % k;
                  S* gfn = gf.data() + static_cast<std::int64_t>(n) * D * hw;
                  for (int d = 0; d < D; ++d) {
                    const S* fc = fn2 + static_cast<std::int64_t>(d) * hw;
                    const S* fs = colF2.data() + (static_cast<std::int64_t>(tap) * D + d) * hw;
                    S* gfd = gfn + static_cast<std::int64_t>(d) * hw;
                    for (int y = 0; y < H; ++y) {
                      const int iy = y - pad + ky;
                      const bool yin = iy >= 0 && iy < H;
                      for (int x2 = 0; x2 < W; ++x2) {
                        const int ix = x2 - pad + kx;
                        if (!yin || ix < 0 || ix >= W) continue;  // padded tap: no feature gradient
                        const std::int64_t i = static_cast<std::int64_t>(y) * W + x2;
                        const S delta = fc[i] - fs[i];
                        const S wv2 = wsum[static_cast<std::size_t>(i)] * delta;
                        gfd[i] -= wv2;
                        gfd[static_cast<std::int64_t>(iy) * W + ix] += wv2;
                      }
                    }
                  }
                }
              }
            }
            if (vn_id >= 0)
              detail::col2im_tapmajor_add(colG.data(), C, H, W, k, pad,
                                          gv.data() + static_cast<std::int64_t>(n) * C * hw);
          }
          if (vn_id >= 0) tp.accumulate(vn_id, gv);
          if (fn_id >= 0) tp.accumulate(fn_id, gf);
          if (wn_id >= 0) tp.accumulate(wn_id, gw);
          if (bn_id >= 0) tp.accumulate(bn_id, gb);
          if (sn_id >= 0) tp.accumulate(sn_id, gs);
        });
    out.attach(tape, id);
  }
  return out;
}

/// Guidance processing head: conv3x3 -> ELU -> conv1x1 -> GroupNorm -> ELU.
template <typename S>
struct GuidanceHeadParams {
  Tensor<S> conv3_w, conv3_b;  // [M,Cs,3,3], [M]
  Tensor<S> conv1_w, conv1_b;  // [D,M,1,1], [D]
  Tensor<S> gn_gamma, gn_beta; // [D]
  int groups = 2;
};

template <typename S>
Tensor<S> guidance_head(const Tensor<S>& semantic_features, const GuidanceHeadParams<S>& p) {
  Tensor<S> h = elu(conv2d(semantic_features, p.conv3_w, p.conv3_b, 1, 1));
  h = conv2d(h, p.conv1_w, p.conv1_b, 1, 0);
  h = group_norm(h, p.gn_gamma, p.gn_beta, p.groups);
  return elu(h);
}

}  // namespace semguide::pac
