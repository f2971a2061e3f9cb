// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#include "semguide/debias/debias.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "semguide/core/random.hpp"

namespace semguide::debias {

namespace {

// Fold the up-direction convention in one place: camera up is -y, so an
// up-oriented normal has negative y component.
void orient_up(PlaneModel& plane) {
  if (plane.normal.y() > 0) {
    plane.normal = -plane.normal;
    plane.offset = -plane.offset;
  }
}

PlaneModel least_squares_plane(const std::vector<Eigen::Vector3d>& pts) {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) {
    const Eigen::Vector3d d = p - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  PlaneModel plane;
  plane.normal = es.eigenvectors().col(0).normalized();
  plane.offset = -plane.normal.dot(centroid);
  orient_up(plane);
  return plane;
}

}  // namespace

PlaneModel ransac_plane(const std::vector<Eigen::Vector3d>& points, const RansacOptions& opts) {
  if (points.size() < 3) throw TensorError("ransac_plane: fewer than 3 candidate points");
  Rng rng(opts.seed * 0x9E3779B97F4A7C15ull + 0xC0FFEEull);
  const int n = static_cast<int>(points.size());

  PlaneModel best;
  best.inlier_count = -1;
  for (int it = 0; it < opts.iterations; ++it) {
    const int i = rng.uniform_int(0, n - 1);
    const int j = rng.uniform_int(0, n - 1);
    const int k = rng.uniform_int(0, n - 1);
    if (i == j || j == k || i == k) continue;
    const Eigen::Vector3d a = points[static_cast<std::size_t>(i)];
    const Eigen::Vector3d ab = points[static_cast<std::size_t>(j)] - a;
    const Eigen::Vector3d ac = points[static_cast<std::size_t>(k)] - a;
    Eigen::Vector3d normal = ab.cross(ac);
    const double norm = normal.norm();
    if (norm < 1e-12 * std::max(1.0, ab.norm() * ac.norm())) continue;  // collinear sample
    normal /= norm;
    const double offset = -normal.dot(a);
    int inliers = 0;
    for (const auto& p : points)
      if (std::fabs(normal.dot(p) + offset) <= opts.inlier_tol) ++inliers;
    if (inliers > best.inlier_count) {
      best.normal = normal;
      best.offset = offset;
      best.inlier_count = inliers;
    }
  }
  if (best.inlier_count < 0) throw TensorError("ransac_plane: all sampled hypotheses degenerate");

  std::vector<Eigen::Vector3d> inliers;
  for (const auto& p : points)
    if (std::fabs(best.normal.dot(p) + best.offset) <= opts.inlier_tol) inliers.push_back(p);
  PlaneModel refined = inliers.size() >= 3 ? least_squares_plane(inliers) : best;
  refined.inlier_count = static_cast<int>(inliers.size());
  orient_up(refined);
  return refined;
}

int count_below(const geo::PointCloud& cloud, const PlaneModel& plane, double margin) {
  int count = 0;
  for (std::size_t i = 0; i < cloud.points.size(); ++i)
    if (cloud.valid[i] && plane.signed_distance(cloud.points[i]) < -margin) ++count;
  return count;
}

std::vector<Eigen::Vector3d> plane_candidates(const geo::PointCloud& cloud, double depth_cutoff) {
  std::vector<Eigen::Vector3d> out;
  for (int row = cloud.height / 2; row < cloud.height; ++row)
    for (int col = 0; col < cloud.width; ++col) {
      const std::size_t i = cloud.index(row, col);
      if (cloud.valid[i] && cloud.points[i].z() < depth_cutoff) out.push_back(cloud.points[i]);
    }
  return out;
}

FilterReport filter_dataset(const std::function<Tensor<float>(const sim::FrameSample&)>& predict_depth,
                            const std::vector<sim::Sequence>& dataset, double d_max,
                            const FilterOptions& opts) {
  FilterReport report;
  report.threshold = opts.threshold;
  int frame_id = 0;
  for (const sim::Sequence& seq : dataset) {
    for (const sim::FrameSample& frame : seq.frames) {
      const Tensor<float> depth = predict_depth(frame);
      const geo::PointCloud cloud = geo::unproject(depth, seq.intrinsics);
      int below = 0;
      bool fit_ok = true;
      try {
        const auto candidates = plane_candidates(cloud, opts.candidate_depth_fraction * d_max);
        if (candidates.size() < 3) throw TensorError("too few plane candidates");
        std::vector<double> depths;
        depths.reserve(candidates.size());
        for (const auto& p : candidates) depths.push_back(p.z());
        std::nth_element(depths.begin(), depths.begin() + static_cast<std::ptrdiff_t>(depths.size() / 2),
                         depths.end());
        const double med = depths[depths.size() / 2];
        RansacOptions ropts;
        ropts.iterations = opts.ransac_iterations;
        ropts.inlier_tol = opts.inlier_tol_scale * med;
        ropts.seed = opts.seed + static_cast<std::uint64_t>(frame_id);
        const PlaneModel plane = ransac_plane(candidates, ropts);
        below = count_below(cloud, plane, opts.margin_scale * plane.camera_height());
      } catch (const TensorError&) {
        fit_ok = false;  // flagged, kept, never silently dropped
      }
      report.per_frame_below_counts.push_back(below);
      if (!fit_ok) report.flagged_indices.push_back(frame_id);
      else if (below > opts.threshold) report.dropped_indices.push_back(frame_id);
      ++frame_id;
    }
  }
  report.total_frames = frame_id;
  report.kept_fraction =
      1.0 - static_cast<double>(report.dropped_indices.size()) / std::max(1, report.total_frames);
  return report;
}

std::string FilterReport::to_json() const {
  nlohmann::json doc;
  doc["threshold"] = threshold;
  doc["per_frame_below_counts"] = per_frame_below_counts;
  doc["dropped_indices"] = dropped_indices;
  doc["flagged_indices"] = flagged_indices;
  doc["kept_fraction"] = kept_fraction;
  doc["total_frames"] = total_frames;
  return doc.dump(2);
}

FilterReport FilterReport::from_json(const std::string& text) {
  const nlohmann::json doc = nlohmann::json::parse(text);
  FilterReport r;
  r.threshold = doc.at("threshold").get<int>();
  r.per_frame_below_counts = doc.at("per_frame_below_counts").get<std::vector<int>>();
  r.dropped_indices = doc.at("dropped_indices").get<std::vector<int>>();
  r.flagged_indices = doc.at("flagged_indices").get<std::vector<int>>();
  r.kept_fraction = doc.at("kept_fraction").get<double>();
  r.total_frames = doc.at("total_frames").get<int>();
  return r;
}

}  // namespace semguide::debias
