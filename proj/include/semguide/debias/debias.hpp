// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "semguide/geometry/camera.hpp"
#include "semguide/sim/scenesim.hpp"

namespace semguide::debias {

/// Plane {X : n.X + d = 0} with unit normal oriented toward the camera's up
/// direction (-y in camera coordinates, so n.y < 0).
struct PlaneModel {
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();
  double offset = 0;
  int inlier_count = 0;

  double signed_distance(const Eigen::Vector3d& p) const { return normal.dot(p) + offset; }
  /// Distance from the camera center (origin of the cloud's frame).
  double camera_height() const { return std::fabs(offset); }
};

struct RansacOptions {
  int iterations = 200;
  double inlier_tol = 0.05;  // meters
  std::uint64_t seed = 0;
};

/// Best 3-point hypothesis by inlier count, refined by least squares over
/// the inliers. Deterministic given the seed. Throws on < 3 candidates or
/// when every sampled hypothesis is degenerate (collinear points).
PlaneModel ransac_plane(const std::vector<Eigen::Vector3d>& points, const RansacOptions& opts = {});

/// Valid points with signed distance below -margin (strict).
int count_below(const geo::PointCloud& cloud, const PlaneModel& plane, double margin);

/// Plane-fit candidates: valid points from the lower image half with depth
/// below depth_cutoff (predictions near the ground are the robust ones).
std::vector<Eigen::Vector3d> plane_candidates(const geo::PointCloud& cloud, double depth_cutoff);

struct FilterOptions {
  int threshold = 10;          // frames with more below-ground points are dropped
  double margin_scale = 0.25;  // margin = margin_scale * fitted camera height
  double candidate_depth_fraction = 0.5;  // candidates have depth < fraction * d_max
  double inlier_tol_scale = 0.02;         // RANSAC tol = scale * median candidate depth
  int ransac_iterations = 200;
  std::uint64_t seed = 7;
};

struct FilterReport {
  std::vector<int> per_frame_below_counts;
  int threshold = 10;
  std::vector<int> dropped_indices;
  std::vector<int> flagged_indices;  // plane fit failed; kept with a warning
  double kept_fraction = 1.0;
  int total_frames = 0;

  bool dropped(int frame) const {
    for (int d : dropped_indices)
      if (d == frame) return true;
    return false;
  }

  std::string to_json() const;
  static FilterReport from_json(const std::string& text);
};

/// Per-frame audit of the infinite-depth failure: fit a ground plane to each
/// frame's predicted cloud, count points significantly below it, and drop
/// frames whose count exceeds the threshold. `predict_depth` maps a frame to
/// a full-resolution [H,W] depth map.
FilterReport filter_dataset(const std::function<Tensor<float>(const sim::FrameSample&)>& predict_depth,
                            const std::vector<sim::Sequence>& dataset, double d_max,
                            const FilterOptions& opts = {});

}  // namespace semguide::debias
