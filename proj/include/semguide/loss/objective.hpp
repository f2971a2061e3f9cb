// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "semguide/core/nn_ops.hpp"
#include "semguide/core/ops.hpp"
#include "semguide/geometry/warp.hpp"

namespace semguide::loss {

/// Sentinel standing in for +inf on masked-out pixels; kept finite so the
/// per-op NaN/Inf guards stay armed.
inline constexpr double kMaskedLoss = 1e9;

struct LossWeights {
  double alpha = 0.85;     // SSIM / L1 mixing
  double lambda1 = 1e-3;   // smoothness coefficient
  double scale_decay = 2;  // per-level smoothness decay factor
};

template <typename S>
struct LossBreakdown {
  Tensor<S> total;  // taped scalar
  std::vector<double> photometric_per_scale;
  std::vector<double> smoothness_per_scale;
  double masked_pixel_fraction = 0;
};

namespace detail {

template <typename S>
Tensor<S> replicate_pad1(const Tensor<S>& x) {
  const int H = x.extent(2), W = x.extent(3);
  Tensor<S> padded = concat<S>({slice(x, 2, 0, 1), x, slice(x, 2, H - 1, H)}, 2);
  return concat<S>({slice(padded, 3, 0, 1), padded, slice(padded, 3, W - 1, W)}, 3);
}

template <typename S>
Tensor<S> box3(const Tensor<S>& x) {
  return avg_pool(replicate_pad1(x), 3, 1);
}

}  // namespace detail

/// Per-pixel SSIM with 3x3 box-filter local statistics (replicate borders),
/// C1 = 0.01^2, C2 = 0.03^2, averaged over channels. Values in [-1, 1].
template <typename S>
Tensor<S> ssim_map(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape() || a.rank() != 3)
    throw ShapeError("ssim_map: images must share a [C,H,W] shape");
  const int C = a.extent(0), H = a.extent(1), W = a.extent(2);
  Tensor<S> x = reshape(a, {1, C, H, W});
  Tensor<S> y = reshape(b, {1, C, H, W});
  const Tensor<S> c1 = Tensor<S>::full({1}, S(0.01 * 0.01));
  const Tensor<S> c2 = Tensor<S>::full({1}, S(0.03 * 0.03));
  const Tensor<S> two = Tensor<S>::full({1}, S(2));

  Tensor<S> mu_x = detail::box3(x), mu_y = detail::box3(y);
  Tensor<S> sigma_x = sub(detail::box3(mul(x, x)), mul(mu_x, mu_x));
  Tensor<S> sigma_y = sub(detail::box3(mul(y, y)), mul(mu_y, mu_y));
  Tensor<S> sigma_xy = sub(detail::box3(mul(x, y)), mul(mu_x, mu_y));

  Tensor<S> num = mul(add(mul(two, mul(mu_x, mu_y)), c1), add(mul(two, sigma_xy), c2));
  Tensor<S> den = mul(add(add(mul(mu_x, mu_x), mul(mu_y, mu_y)), c1), add(add(sigma_x, sigma_y), c2));
  Tensor<S> ssim = div(num, den);

  Tensor<S> channel_mean = mul(sum_axis(ssim, 1), Tensor<S>::full({1}, S(1) / S(C)));
  return reshape(channel_mean, {H, W});
}

/// alpha (1 - SSIM)/2 + (1 - alpha) |I_t - I_hat|, L1 averaged over channels.
template <typename S>
Tensor<S> photometric_map(const Tensor<S>& target, const Tensor<S>& candidate, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw TensorError("photometric_map: alpha outside [0,1]");
  if (target.shape() != candidate.shape() || target.rank() != 3)
    throw ShapeError("photometric_map: images must share a [C,H,W] shape");
  const int C = target.extent(0), H = target.extent(1), W = target.extent(2);
  Tensor<S> l1 = reshape(mul(sum_axis(reshape(abs(sub(target, candidate)), {1, C, H, W}), 1),
                             Tensor<S>::full({1}, S(1) / S(C))),
                         {H, W});
  if (alpha == 0.0) return l1;
  // rounding can push SSIM marginally past 1; the map must stay nonnegative
  Tensor<S> dssim = clamp(mul(sub(Tensor<S>::full({1}, S(1)), ssim_map(target, candidate)),
                              Tensor<S>::full({1}, S(0.5))),
                          S(0), S(1));
  return add(mul(Tensor<S>::full({1}, static_cast<S>(alpha)), dssim),
             mul(Tensor<S>::full({1}, static_cast<S>(1.0 - alpha)), l1));
}

/// Per-pixel minimum across source losses. Pixels invalid in a source get
/// the masked sentinel first, so the minimum prefers any valid source.
/// `valid` may be empty (all pixels valid everywhere).
template <typename S>
Tensor<S> min_reprojection(const std::vector<Tensor<S>>& losses, const std::vector<Tensor<S>>& valid = {}) {
  if (losses.empty()) throw ShapeError("min_reprojection: no source losses");
  if (!valid.empty() && valid.size() != losses.size())
    throw ShapeError("min_reprojection: mask count mismatch");
  const int H = losses[0].extent(0), W = losses[0].extent(1);
  std::vector<Tensor<S>> stacked;
  for (std::size_t s = 0; s < losses.size(); ++s) {
    Tensor<S> m = losses[s];
    if (m.shape() != losses[0].shape()) throw ShapeError("min_reprojection: loss shapes differ");
    if (!valid.empty()) {
      // masked = loss * valid + (1 - valid) * sentinel
      const Tensor<S>& vmask = valid[s];
      Tensor<S> inv = sub(Tensor<S>::full({H, W}, S(1)), vmask);
      m = add(mul(m, vmask), mul(inv, Tensor<S>::full({1}, S(kMaskedLoss))));
    }
    stacked.push_back(reshape(m, {1, H, W}));
  }
  if (stacked.size() == 1) return reshape(stacked[0], {H, W});
  return min_axis(concat(stacked, 0), 0);
}

/// Stationary-pixel mask: true where the best warped loss beats the best
/// unwarped one. Pure value comparison, never on the tape.
template <typename S>
Tensor<S> auto_mask(const std::vector<Tensor<S>>& warped, const std::vector<Tensor<S>>& unwarped,
                    const std::vector<Tensor<S>>& valid = {}) {
  if (warped.size() != unwarped.size()) throw ShapeError("auto_mask: source count mismatch");
  Tensor<S> min_w = min_reprojection(warped, valid).detached();
  std::vector<Tensor<S>> unw;
  for (const Tensor<S>& u : unwarped) unw.push_back(u.detached());
  Tensor<S> min_u = min_reprojection(unw);
  return less_than(min_w, min_u);
}

/// Edge-aware smoothness |dx d| e^{-|dx I|} + |dy d| e^{-|dy I|} over the
/// mean-normalized inverse depth; image gradients are mean absolute channel
/// gradients.
template <typename S>
Tensor<S> smoothness(const Tensor<S>& inv_depth, const Tensor<S>& image) {
  if (inv_depth.rank() != 2 || image.rank() != 3 || image.extent(1) != inv_depth.extent(0) ||
      image.extent(2) != inv_depth.extent(1))
    throw ShapeError("smoothness: inverse depth and image extents differ");
  Tensor<S> m = mean(inv_depth);
  if (std::fabs(static_cast<double>(m.item())) < 1e-12)
    throw TensorError("smoothness: inverse depth has zero mean");
  Tensor<S> d = div(inv_depth, m);

  const int C = image.extent(0);
  auto channel_mean_abs = [&](const Tensor<S>& t, int h, int w) {
    return reshape(mul(sum_axis(reshape(t, {1, C, h, w}), 1), Tensor<S>::full({1}, S(1) / S(C))), {h, w});
  };
  const int H = inv_depth.extent(0), W = inv_depth.extent(1);
  Tensor<S> gx = abs(spatial_gradient_x(d));
  Tensor<S> gy = abs(spatial_gradient_y(d));
  Tensor<S> ix = channel_mean_abs(abs(spatial_gradient_x(image)), H, W - 1);
  Tensor<S> iy = channel_mean_abs(abs(spatial_gradient_y(image)), H - 1, W);
  Tensor<S> term_x = mean(mul(gx, exp(neg(ix))));
  Tensor<S> term_y = mean(mul(gy, exp(neg(iy))));
  return add(term_x, term_y);
}

/// Total objective over an inverse-depth pyramid: per scale, the auto-masked
/// minimum-reprojection photometric term plus 2^-s decayed smoothness, then
/// the mean across scales. Inverse depth is upsampled to full resolution
/// before warping; smoothness runs at native scale on the downsampled image.
template <typename S>
LossBreakdown<S> total_loss(const Tensor<S>& target, const std::vector<Tensor<S>>& sources,
                            const std::vector<Tensor<S>>& inv_depth_pyramid,
                            const std::vector<Tensor<S>>& poses, const geo::Intrinsics& K,
                            const LossWeights& weights) {
  if (sources.empty() || sources.size() != poses.size())
    throw ShapeError("total_loss: sources and poses must pair up");
  if (inv_depth_pyramid.empty()) throw ShapeError("total_loss: empty pyramid");
  const int num_scales = static_cast<int>(inv_depth_pyramid.size());
  const int C = target.extent(0), H = target.extent(1), W = target.extent(2);

  // Unwarped losses once; image pyramid for the smoothness term.
  std::vector<Tensor<S>> unwarped;
  for (const Tensor<S>& src : sources)
    unwarped.push_back(photometric_map(target, src.detached(), weights.alpha));
  std::vector<Tensor<S>> image_pyramid{target.detached()};
  for (int s = 1; s < num_scales; ++s) {
    Tensor<S> prev = image_pyramid.back();
    Tensor<S> down = avg_pool(reshape(prev, {1, C, prev.extent(1), prev.extent(2)}), 2, 2);
    image_pyramid.push_back(reshape(down, {C, down.extent(2), down.extent(3)}));
  }

  LossBreakdown<S> out;
  Tensor<S> acc;
  double mask_fraction_acc = 0;
  for (int s = 0; s < num_scales; ++s) {
    const Tensor<S>& inv_s = inv_depth_pyramid[static_cast<std::size_t>(s)];
    if (inv_s.extent(0) != (H >> s) || inv_s.extent(1) != (W >> s))
      throw ShapeError("total_loss: pyramid level " + std::to_string(s) + " has wrong extents");
    Tensor<S> inv_full =
        s == 0 ? inv_s
               : reshape(upsample_bilinear(reshape(inv_s, {1, 1, H >> s, W >> s}), 1 << s), {H, W});
    Tensor<S> depth_full = div(Tensor<S>::full({1}, S(1)), inv_full);

    std::vector<Tensor<S>> warped_losses, valid_masks;
    for (std::size_t i = 0; i < sources.size(); ++i) {
      geo::SynthesizedView<S> view = geo::synthesize_view(sources[i].detached(), depth_full, poses[i], K);
      warped_losses.push_back(photometric_map(target, view.image, weights.alpha));
      valid_masks.push_back(view.mask);
    }
    Tensor<S> min_warped = min_reprojection(warped_losses, valid_masks);
    Tensor<S> mask = auto_mask(warped_losses, unwarped, valid_masks);
    double count = 0;
    for (std::int64_t i = 0; i < mask.size(); ++i) count += mask[i];
    if (count == 0)
      throw NumericError("total_loss: auto-mask rejected every pixel at scale " + std::to_string(s) +
                         " (degenerate batch)");
    mask_fraction_acc += count / static_cast<double>(mask.size());

    Tensor<S> photo =
        mul(sum(mul(min_warped, mask)), Tensor<S>::full({1}, S(1) / static_cast<S>(count)));
    Tensor<S> smooth = smoothness(inv_s, image_pyramid[static_cast<std::size_t>(s)]);
    const double decay = std::pow(weights.scale_decay, -s);
    Tensor<S> level = add(photo, mul(Tensor<S>::full({1}, static_cast<S>(weights.lambda1 * decay)), smooth));

    out.photometric_per_scale.push_back(photo.item());
    out.smoothness_per_scale.push_back(smooth.item());
    acc = s == 0 ? level : add(acc, level);
  }
  out.total = mul(acc, Tensor<S>::full({1}, S(1) / static_cast<S>(num_scales)));
  out.masked_pixel_fraction = mask_fraction_acc / num_scales;
  return out;
}

}  // namespace semguide::loss
