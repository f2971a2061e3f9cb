// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

// Brute-force reference implementations used only by tests. These stay
// deliberately naive (nested loops, std::exp, scalar accumulation) and
// independent of the library's compute paths.

#pragma once

#include <cmath>
#include <vector>

#include "semguide/core/random.hpp"
#include "semguide/core/tensor.hpp"

namespace oracle {

template <typename S>
semguide::Tensor<S> conv2d(const semguide::Tensor<S>& x, const semguide::Tensor<S>& w,
                           const semguide::Tensor<S>& bias, int stride, int pad) {
  const int N = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
  const int O = w.extent(0), k = w.extent(2);
  const int outH = (H + 2 * pad - k) / stride + 1;
  const int outW = (W + 2 * pad - k) / stride + 1;
  semguide::Tensor<S> out = semguide::Tensor<S>::zeros({N, O, outH, outW});
  for (int n = 0; n < N; ++n)
    for (int o = 0; o < O; ++o)
      for (int oy = 0; oy < outH; ++oy)
        for (int ox = 0; ox < outW; ++ox) {
          double acc = bias.defined() ? static_cast<double>(bias[o]) : 0.0;
          for (int c = 0; c < C; ++c)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * stride - pad + ky;
                const int ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                acc += static_cast<double>(x[((static_cast<std::int64_t>(n) * C + c) * H + iy) * W + ix]) *
                       static_cast<double>(w[((static_cast<std::int64_t>(o) * C + c) * k + ky) * k + kx]);
              }
          out[((static_cast<std::int64_t>(n) * O + o) * outH + oy) * outW + ox] = static_cast<S>(acc);
        }
  return out;
}

/// Literal evaluation of the pixel-adaptive sum: for every output pixel,
/// walk the window, evaluate the Gaussian kernel on raw guidance features,
/// multiply by the spatial filter tap and the (zero-padded) signal.
template <typename S>
semguide::Tensor<S> pac(const semguide::Tensor<S>& v, const semguide::Tensor<S>& f,
                        const semguide::Tensor<S>& w, const semguide::Tensor<S>& bias,
                        const semguide::Tensor<S>& log_sigma) {
  const int N = v.extent(0), C = v.extent(1), H = v.extent(2), W = v.extent(3);
  const int D = f.extent(1), O = w.extent(0), k = w.extent(2), pad = k / 2;
  semguide::Tensor<S> out = semguide::Tensor<S>::zeros({N, O, H, W});
  for (int n = 0; n < N; ++n)
    for (int o = 0; o < O; ++o) {
      const double sigma = std::exp(static_cast<double>(log_sigma[o]));
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          double acc = bias[o];
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int jy = y - pad + ky, jx = x - pad + kx;
              if (jy < 0 || jy >= H || jx < 0 || jx >= W) continue;
              double d2 = 0;
              for (int d = 0; d < D; ++d) {
                const double fi = f[((static_cast<std::int64_t>(n) * D + d) * H + y) * W + x];
                const double fj = f[((static_cast<std::int64_t>(n) * D + d) * H + jy) * W + jx];
                d2 += (fi - fj) * (fi - fj);
              }
              const double kernel = std::exp(-d2 / (2.0 * sigma * sigma));
              double tap = 0;
              for (int c = 0; c < C; ++c)
                tap += static_cast<double>(w[((static_cast<std::int64_t>(o) * C + c) * k + ky) * k + kx]) *
                       static_cast<double>(v[((static_cast<std::int64_t>(n) * C + c) * H + jy) * W + jx]);
              acc += kernel * tap;
            }
          out[((static_cast<std::int64_t>(n) * O + o) * H + y) * W + x] = static_cast<S>(acc);
        }
    }
  return out;
}

/// Direct per-window SSIM with clamped (replicate) 3x3 windows, averaged
/// over channels.
template <typename S>
semguide::Tensor<S> ssim(const semguide::Tensor<S>& a, const semguide::Tensor<S>& b) {
  const int C = a.extent(0), H = a.extent(1), W = a.extent(2);
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  semguide::Tensor<S> out = semguide::Tensor<S>::zeros({H, W});
  auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double acc = 0;
      for (int c = 0; c < C; ++c) {
        double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = clampi(y + dy, 0, H - 1), xx = clampi(x + dx, 0, W - 1);
            const double va = a[(static_cast<std::int64_t>(c) * H + yy) * W + xx];
            const double vb = b[(static_cast<std::int64_t>(c) * H + yy) * W + xx];
            mx += va; my += vb; mxx += va * va; myy += vb * vb; mxy += va * vb;
          }
        mx /= 9; my /= 9; mxx /= 9; myy /= 9; mxy /= 9;
        const double sx = mxx - mx * mx, sy = myy - my * my, sxy = mxy - mx * my;
        acc += ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sx + sy + c2));
      }
      out[static_cast<std::int64_t>(y) * W + x] = static_cast<S>(acc / C);
    }
  return out;
}

struct MetricsOracle {
  double abs_rel = 0, sq_rel = 0, rmse = 0, rmse_log = 0, delta1 = 0, delta2 = 0, delta3 = 0;
};

/// Scalar-loop metrics over explicitly listed pixels (already scaled/clamped).
inline MetricsOracle metrics(const std::vector<double>& pred, const std::vector<double>& gt) {
  MetricsOracle m;
  const double n = static_cast<double>(pred.size());
  double sq = 0, sq_log = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double diff = pred[i] - gt[i];
    m.abs_rel += std::fabs(diff) / gt[i];
    m.sq_rel += diff * diff / gt[i];
    sq += diff * diff;
    const double l = std::log(pred[i]) - std::log(gt[i]);
    sq_log += l * l;
    const double r = std::max(pred[i] / gt[i], gt[i] / pred[i]);
    if (r < 1.25) m.delta1 += 1;
    if (r < 1.25 * 1.25) m.delta2 += 1;
    if (r < 1.25 * 1.25 * 1.25) m.delta3 += 1;
  }
  m.abs_rel /= n; m.sq_rel /= n;
  m.rmse = std::sqrt(sq / n);
  m.rmse_log = std::sqrt(sq_log / n);
  m.delta1 /= n; m.delta2 /= n; m.delta3 /= n;
  return m;
}

template <typename S>
semguide::Tensor<S> random_tensor(semguide::Shape shape, semguide::Rng& rng, double lo = -1, double hi = 1) {
  semguide::Tensor<S> t = semguide::Tensor<S>::zeros(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<S>(rng.uniform(lo, hi));
  return t;
}

}  // namespace oracle
