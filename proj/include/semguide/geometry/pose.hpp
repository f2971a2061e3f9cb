// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace semguide::geo {

/// Rigid camera motion, axis-angle rotation (radians * unit axis) plus
/// translation in meters. Minimal 6-DoF chart, smooth near the identity
/// where the pose network operates.
struct PoseSE3 {
  Eigen::Vector3d rotation = Eigen::Vector3d::Zero();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static PoseSE3 identity() { return {}; }
};

/// Rodrigues exponential.
Eigen::Matrix3d rotation_matrix(const Eigen::Vector3d& axis_angle);

/// Log map (rotation matrix -> axis-angle).
Eigen::Vector3d axis_angle(const Eigen::Matrix3d& rotation);

Eigen::Matrix4d se3_to_matrix(const PoseSE3& pose);
PoseSE3 se3_from_matrix(const Eigen::Matrix4d& transform);

/// compose(a, b): the transform applying b first, then a.
PoseSE3 se3_compose(const PoseSE3& a, const PoseSE3& b);
PoseSE3 se3_invert(const PoseSE3& a);

inline Eigen::Vector3d apply(const PoseSE3& pose, const Eigen::Vector3d& point) {
  return rotation_matrix(pose.rotation) * point + pose.translation;
}

}  // namespace semguide::geo
