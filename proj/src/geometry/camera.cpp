// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#include "semguide/geometry/camera.hpp"

namespace semguide::geo {

PointCloud unproject(const Tensor<float>& depth, const Intrinsics& K) {
  if (depth.rank() != 2 || depth.extent(0) != K.height || depth.extent(1) != K.width)
    throw ShapeError("unproject: depth map does not match intrinsics extents");
  PointCloud cloud;
  cloud.height = K.height;
  cloud.width = K.width;
  cloud.points.resize(static_cast<std::size_t>(K.height) * K.width, Eigen::Vector3d::Zero());
  cloud.valid.resize(cloud.points.size(), 0);
  for (int v = 0; v < K.height; ++v)
    for (int u = 0; u < K.width; ++u) {
      const std::size_t i = cloud.index(v, u);
      const double d = depth[static_cast<std::int64_t>(i)];
      if (!(d > 0) || !std::isfinite(d)) continue;
      cloud.points[i] = Eigen::Vector3d((u - K.cx) * d / K.fx, (v - K.cy) * d / K.fy, d);
      cloud.valid[i] = 1;
    }
  return cloud;
}

Projection project(const PointCloud& cloud, const Intrinsics& K, double z_min) {
  Projection proj;
  proj.height = cloud.height;
  proj.width = cloud.width;
  proj.pixel.resize(cloud.points.size(), Eigen::Vector2d::Zero());
  proj.depth.resize(cloud.points.size(), 0);
  proj.valid.resize(cloud.points.size(), 0);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (!cloud.valid[i]) continue;
    const Eigen::Vector3d& p = cloud.points[i];
    if (p.z() <= z_min) continue;
    proj.pixel[i] = Eigen::Vector2d(K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy);
    proj.depth[i] = p.z();
    proj.valid[i] = 1;
  }
  return proj;
}

PointCloud transform(const PointCloud& cloud, const PoseSE3& pose) {
  const Eigen::Matrix3d R = rotation_matrix(pose.rotation);
  PointCloud out = cloud;
  for (std::size_t i = 0; i < cloud.points.size(); ++i)
    if (cloud.valid[i]) out.points[i] = R * cloud.points[i] + pose.translation;
  return out;
}

}  // namespace semguide::geo
