// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#include "semguide/geometry/pose.hpp"

#include <cmath>

namespace semguide::geo {

Eigen::Matrix3d rotation_matrix(const Eigen::Vector3d& axis_angle) {
  const double theta = axis_angle.norm();
  if (theta < 1e-12) return Eigen::Matrix3d::Identity();
  Eigen::Matrix3d cross;
  cross << 0, -axis_angle.z(), axis_angle.y(),
           axis_angle.z(), 0, -axis_angle.x(),
           -axis_angle.y(), axis_angle.x(), 0;
  const double a = std::sin(theta) / theta;
  const double half = std::sin(theta / 2);
  const double b = 2.0 * half * half / (theta * theta);  // (1 - cos) / theta^2, cancellation-free
  return Eigen::Matrix3d::Identity() + a * cross + b * cross * cross;
}

Eigen::Vector3d axis_angle(const Eigen::Matrix3d& rotation) {
  const Eigen::AngleAxisd aa(rotation);
  return aa.angle() * aa.axis();
}

Eigen::Matrix4d se3_to_matrix(const PoseSE3& pose) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix(pose.rotation);
  m.topRightCorner<3, 1>() = pose.translation;
  return m;
}

PoseSE3 se3_from_matrix(const Eigen::Matrix4d& transform) {
  PoseSE3 p;
  p.rotation = axis_angle(transform.topLeftCorner<3, 3>());
  p.translation = transform.topRightCorner<3, 1>();
  return p;
}

PoseSE3 se3_compose(const PoseSE3& a, const PoseSE3& b) {
  const Eigen::Matrix3d Ra = rotation_matrix(a.rotation);
  const Eigen::Matrix3d Rb = rotation_matrix(b.rotation);
  PoseSE3 out;
  out.rotation = axis_angle(Ra * Rb);
  out.translation = Ra * b.translation + a.translation;
  return out;
}

PoseSE3 se3_invert(const PoseSE3& a) {
  const Eigen::Matrix3d R = rotation_matrix(a.rotation);
  PoseSE3 out;
  out.rotation = axis_angle(Eigen::Matrix3d(R.transpose()));
  out.translation = -(R.transpose() * a.translation);
  return out;
}

}  // namespace semguide::geo
