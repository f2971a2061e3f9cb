// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "semguide/core/tensor.hpp"
#include "semguide/geometry/pose.hpp"

namespace semguide::geo {

/// Pinhole projection parameters, pixel units. Pixel (row i, col j) has its
/// center at continuous coordinates (x = j, y = i).
struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  void validate() const {
    if (!(fx > 0 && fy > 0)) throw TensorError("intrinsics: focal lengths must be positive");
    if (!(cx >= 0 && cx < width && cy >= 0 && cy < height))
      throw TensorError("intrinsics: principal point outside image");
  }
};

/// Camera-frame points per pixel; invalid entries are excluded from all
/// downstream statistics.
struct PointCloud {
  int height = 0, width = 0;
  std::vector<Eigen::Vector3d> points;
  std::vector<std::uint8_t> valid;

  std::size_t index(int row, int col) const { return static_cast<std::size_t>(row) * width + col; }
};

struct Projection {
  int height = 0, width = 0;
  std::vector<Eigen::Vector2d> pixel;  // (x, y)
  std::vector<double> depth;
  std::vector<std::uint8_t> valid;
};

inline constexpr double kProjectionZMin = 1e-3;  // meters

/// X = (u-cx) d / fx, Y = (v-cy) d / fy, Z = d. Nonpositive depth marks the
/// point invalid, never throws.
PointCloud unproject(const Tensor<float>& depth, const Intrinsics& K);

/// u = fx X/Z + cx, v = fy Y/Z + cy; Z <= z_min marks invalid.
Projection project(const PointCloud& cloud, const Intrinsics& K, double z_min = kProjectionZMin);

PointCloud transform(const PointCloud& cloud, const PoseSE3& pose);

}  // namespace semguide::geo
