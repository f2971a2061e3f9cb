// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include "semguide/core/nn_ops.hpp"
#include "semguide/core/ops.hpp"
#include "semguide/geometry/camera.hpp"

namespace semguide::geo {

/// Differentiable view synthesis. Everything here runs through tensor
/// primitives so that gradients reach both the depth map and the 6-DoF pose
/// vector; the plain Eigen routines in camera.hpp are the non-differentiable
/// twins used by the renderer and the evaluation side.

template <typename S>
struct RigidTransformExpr {
  std::array<Tensor<S>, 9> rotation;    // row-major scalar entries
  std::array<Tensor<S>, 3> translation;
};

/// Rodrigues exponential over tensor scalars, pose = (axis-angle, t).
/// Uses 1 - cos = 2 sin^2(theta/2) so small angles stay well conditioned.
template <typename S>
RigidTransformExpr<S> rigid_transform_expr(const Tensor<S>& pose6) {
  if (pose6.size() != 6) throw ShapeError("rigid_transform_expr: pose must have 6 parameters");
  Tensor<S> flat = reshape(pose6, {6});
  std::array<Tensor<S>, 3> r, t;
  for (int i = 0; i < 3; ++i) {
    r[static_cast<std::size_t>(i)] = slice(flat, 0, i, i + 1);
    t[static_cast<std::size_t>(i)] = slice(flat, 0, i + 3, i + 4);
  }
  Tensor<S> theta_sq = add(add(mul(r[0], r[0]), mul(r[1], r[1])), mul(r[2], r[2]));
  Tensor<S> theta = sqrt(add(theta_sq, Tensor<S>::full({1}, S(1e-24))));
  Tensor<S> a = div(sin(theta), theta);
  Tensor<S> half = sin(div(theta, Tensor<S>::full({1}, S(2))));
  Tensor<S> b = div(mul(Tensor<S>::full({1}, S(2)), mul(half, half)), mul(theta, theta));

  auto K = [&](int i, int j) -> Tensor<S> {
    // cross-product matrix of r
    static const int sign[3][3] = {{0, -1, 1}, {1, 0, -1}, {-1, 1, 0}};
    static const int comp[3][3] = {{0, 2, 1}, {2, 0, 0}, {1, 0, 0}};
    if (i == j) return Tensor<S>::zeros({1});
    Tensor<S> v = r[static_cast<std::size_t>(comp[i][j])];
    return sign[i][j] > 0 ? v : neg(v);
  };

  RigidTransformExpr<S> out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      // R = I + a K + b (r r^T - theta^2 I)
      Tensor<S> rr = mul(r[static_cast<std::size_t>(i)], r[static_cast<std::size_t>(j)]);
      Tensor<S> kk = i == j ? sub(rr, theta_sq) : rr;
      Tensor<S> entry = add(mul(a, K(i, j)), mul(b, kk));
      if (i == j) entry = add(entry, Tensor<S>::full({1}, S(1)));
      out.rotation[static_cast<std::size_t>(i * 3 + j)] = entry;
    }
  out.translation = t;
  return out;
}

template <typename S>
struct WarpGrid {
  Tensor<S> grid;       // [1,H,W,2] source-pixel coordinates
  Tensor<S> depth_s;    // [H,W] transformed depth (differentiable)
  Tensor<S> front_mask; // [H,W] constant {0,1}: transformed depth > z_min
};

/// Reproject each target pixel through depth and relative pose into the
/// source view: grid = project(transform(unproject(D, K), pose), K).
template <typename S>
WarpGrid<S> warp_grid(const Tensor<S>& depth, const Tensor<S>& pose6, const Intrinsics& K) {
  if (depth.rank() != 2 || depth.extent(0) != K.height || depth.extent(1) != K.width)
    throw ShapeError("warp_grid: depth map does not match intrinsics extents");
  const int H = K.height, W = K.width;

  Tensor<S> ugrid = Tensor<S>::zeros({H, W});
  Tensor<S> vgrid = Tensor<S>::zeros({H, W});
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      ugrid[static_cast<std::int64_t>(y) * W + x] = static_cast<S>((x - K.cx) / K.fx);
      vgrid[static_cast<std::int64_t>(y) * W + x] = static_cast<S>((y - K.cy) / K.fy);
    }

  Tensor<S> X = mul(ugrid, depth);
  Tensor<S> Y = mul(vgrid, depth);
  const Tensor<S>& Z = depth;

  RigidTransformExpr<S> T = rigid_transform_expr(pose6);
  auto row = [&](int i) {
    return add(add(add(mul(T.rotation[static_cast<std::size_t>(i * 3 + 0)], X),
                       mul(T.rotation[static_cast<std::size_t>(i * 3 + 1)], Y)),
                   mul(T.rotation[static_cast<std::size_t>(i * 3 + 2)], Z)),
               mul(T.translation[static_cast<std::size_t>(i)], Tensor<S>::full({H, W}, S(1))));
  };
  Tensor<S> Xc = row(0), Yc = row(1), Zc = row(2);

  const S z_min = static_cast<S>(kProjectionZMin);
  Tensor<S> z_safe = maximum(Zc, Tensor<S>::full({H, W}, z_min));
  Tensor<S> u = add(mul(Tensor<S>::full({1}, static_cast<S>(K.fx)), div(Xc, z_safe)),
                    Tensor<S>::full({1}, static_cast<S>(K.cx)));
  Tensor<S> v = add(mul(Tensor<S>::full({1}, static_cast<S>(K.fy)), div(Yc, z_safe)),
                    Tensor<S>::full({1}, static_cast<S>(K.cy)));

  WarpGrid<S> out;
  out.grid = concat<S>({reshape(u, {1, H, W, 1}), reshape(v, {1, H, W, 1})}, 3);
  out.depth_s = Zc;
  out.front_mask = less_than(Tensor<S>::full({H, W}, z_min), Zc.detached());
  return out;
}

template <typename S>
struct SynthesizedView {
  Tensor<S> image;  // same shape as the source image
  Tensor<S> mask;   // [H,W] constant {0,1}: in-bounds and in front of the camera
};

/// Inverse warping: sample the source image at the reprojected coordinates.
/// Differentiable w.r.t. depth and pose; the validity mask is a constant.
template <typename S>
SynthesizedView<S> synthesize_view(const Tensor<S>& source_image, const Tensor<S>& depth,
                                   const Tensor<S>& pose6, const Intrinsics& K) {
  Tensor<S> src = source_image;
  const bool chw = src.rank() == 3;
  if (chw) src = reshape(src, {1, src.extent(0), src.extent(1), src.extent(2)});
  if (src.rank() != 4 || src.extent(2) != K.height || src.extent(3) != K.width)
    throw ShapeError("synthesize_view: image does not match intrinsics extents");

  WarpGrid<S> wg = warp_grid(depth, pose6, K);
  SampleResult<S> sampled = bilinear_sample(src, wg.grid);

  SynthesizedView<S> out;
  out.image = chw ? reshape(sampled.values, {src.extent(1), K.height, K.width}) : sampled.values;
  Tensor<S> in_bounds = reshape(sampled.mask, {K.height, K.width});
  out.mask = mul(in_bounds, wg.front_mask);
  return out;
}

}  // namespace semguide::geo
