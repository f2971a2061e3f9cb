// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#include "semguide/sim/scenesim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semguide/core/parallel.hpp"
#include "semguide/core/random.hpp"

namespace semguide::sim {

const char* class_name(int id) {
  switch (static_cast<SemClass>(id)) {
    case SemClass::sky: return "sky";
    case SemClass::road: return "road";
    case SemClass::building: return "building";
    case SemClass::car: return "car";
    case SemClass::pole: return "pole";
  }
  return "unknown";
}

namespace {

Eigen::Matrix3d cam_to_world_rotation(double yaw, double pitch) {
  Eigen::Matrix3d ry, rx;
  // y points down; positive pitch sends the forward axis toward +y (downward)
  ry << std::cos(yaw), 0, std::sin(yaw), 0, 1, 0, -std::sin(yaw), 0, std::cos(yaw);
  rx << 1, 0, 0, 0, std::cos(pitch), std::sin(pitch), 0, -std::sin(pitch), std::cos(pitch);
  return ry * rx;
}

struct TextureParams {
  double ax, az, phix, phiz;   // primary sinusoid
  double bx, bz, psix, psiz;   // secondary, higher frequency
};

TextureParams texture_params(std::uint32_t seed) {
  Rng rng(0x5EEDu + seed * 0x9E3779B9u);
  TextureParams p;
  p.ax = rng.uniform(1.6, 3.2);
  p.az = rng.uniform(1.6, 3.2);
  p.phix = rng.uniform(0, 2 * M_PI);
  p.phiz = rng.uniform(0, 2 * M_PI);
  p.bx = rng.uniform(6.0, 9.0);
  p.bz = rng.uniform(6.0, 9.0);
  p.psix = rng.uniform(0, 2 * M_PI);
  p.psiz = rng.uniform(0, 2 * M_PI);
  return p;
}

// Smooth procedural brightness in roughly [0.3, 1.0]; low frequencies keep
// bilinear interpolation error small, the secondary term keeps photometric
// gradients informative.
double texture_brightness(const TextureParams& p, double u, double v) {
  const double primary = std::sin(p.ax * u + p.phix) * std::sin(p.az * v + p.phiz);
  const double secondary = std::sin(p.bx * u + p.psix) * std::sin(p.bz * v + p.psiz);
  const double checker = std::tanh(2.5 * std::sin(1.1 * u) * std::sin(1.1 * v));
  return 0.62 + 0.17 * primary + 0.08 * secondary + 0.08 * checker;
}

Eigen::Vector3d base_color(int cls) {
  switch (static_cast<SemClass>(cls)) {
    case SemClass::sky: return {0.55, 0.65, 0.80};
    case SemClass::road: return {0.45, 0.45, 0.48};
    case SemClass::building: return {0.62, 0.50, 0.40};
    case SemClass::car: return {0.30, 0.42, 0.68};
    case SemClass::pole: return {0.66, 0.64, 0.34};
  }
  return {1, 0, 1};
}

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  int cls = static_cast<int>(SemClass::sky);
  Eigen::Vector3d local = Eigen::Vector3d::Zero();  // texture coordinates source
  int face_axis = 1;                                // dominant normal axis of the hit face
  std::uint32_t seed = 0;
  bool valid = false;
};

bool ray_aabb(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const Eigen::Vector3d& lo,
              const Eigen::Vector3d& hi, double& t_hit, int& face_axis) {
  double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
  int axis = 0;
  for (int a = 0; a < 3; ++a) {
    if (std::fabs(dir[a]) < 1e-12) {
      if (origin[a] < lo[a] || origin[a] > hi[a]) return false;
      continue;
    }
    double t0 = (lo[a] - origin[a]) / dir[a];
    double t1 = (hi[a] - origin[a]) / dir[a];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > tmin) {
      tmin = t0;
      axis = a;
    }
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return false;
  }
  if (tmin <= 1e-9) return false;  // origin inside or behind
  t_hit = tmin;
  face_axis = axis;
  return true;
}

}  // namespace

geo::PoseSE3 trajectory_pose(const SceneSpec& spec, int frame_index) {
  const TrajectorySpec& tr = spec.trajectory;
  if (!tr.poses.empty()) {
    if (frame_index >= static_cast<int>(tr.poses.size()))
      throw TensorError("trajectory: fewer poses than frames");
    return tr.poses[static_cast<std::size_t>(frame_index)];
  }
  const double yaw =
      tr.yaw_amplitude == 0.0
          ? 0.0
          : tr.yaw_amplitude * std::sin(2.0 * M_PI * frame_index / std::max(tr.yaw_period, 1e-6));
  const Eigen::Vector3d position = tr.start + frame_index * tr.velocity;
  const Eigen::Matrix3d r_cw = cam_to_world_rotation(yaw, tr.pitch);
  geo::PoseSE3 pose;
  pose.rotation = geo::axis_angle(Eigen::Matrix3d(r_cw.transpose()));
  pose.translation = -(r_cw.transpose() * position);
  return pose;
}

FrameSample render(const SceneSpec& spec, int frame_index) {
  if (frame_index < 0 || frame_index >= spec.frames)
    throw TensorError("render: frame index out of range");
  const geo::Intrinsics& K = spec.intrinsics;
  K.validate();

  const geo::PoseSE3 pose = trajectory_pose(spec, frame_index);
  const Eigen::Matrix3d r_wc = geo::rotation_matrix(pose.rotation);
  const Eigen::Matrix3d r_cw = r_wc.transpose();
  const Eigen::Vector3d camera = -(r_cw * pose.translation);
  if (camera.y() >= 0) throw TensorError("render: camera is on or below the ground plane");

  struct MovedBox {
    Eigen::Vector3d lo, hi, center;
    int cls;
    std::uint32_t seed;
    int index;
  };
  std::vector<MovedBox> boxes;
  for (std::size_t bi = 0; bi < spec.boxes.size(); ++bi) {
    const Box& b = spec.boxes[bi];
    const Eigen::Vector3d c = b.center + frame_index * b.velocity;
    MovedBox mb{c - b.size / 2, c + b.size / 2, c, b.cls, b.texture_seed, static_cast<int>(bi)};
    if (mb.hi.y() > 1e-9) throw TensorError("render: box extends below the ground plane");
    boxes.push_back(mb);
  }

  const int H = K.height, W = K.width;
  FrameSample frame;
  frame.image = Tensor<float>::zeros({3, H, W});
  frame.depth_gt = Tensor<float>::zeros({H, W});
  frame.semantic_gt.assign(static_cast<std::size_t>(H) * W, static_cast<std::uint8_t>(SemClass::sky));
  frame.object_gt.assign(static_cast<std::size_t>(H) * W, -1);
  frame.pose_gt = pose;

  const TextureParams ground_tex = texture_params(spec.ground_seed);
  float* img = frame.image.data();
  float* depth = frame.depth_gt.data();

  parallel_for(static_cast<std::int64_t>(H) * W, [&](std::int64_t lo_i, std::int64_t hi_i) {
    for (std::int64_t idx = lo_i; idx < hi_i; ++idx) {
      const int y = static_cast<int>(idx / W);
      const int x = static_cast<int>(idx % W);
      const Eigen::Vector3d dir_cam((x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0);
      const Eigen::Vector3d dir = r_cw * dir_cam;

      Hit hit;
      int hit_object = -1;
      if (dir.y() > 1e-12) {
        const double t = -camera.y() / dir.y();
        if (t > 0) {
          hit.t = t;
          hit.cls = static_cast<int>(SemClass::road);
          const Eigen::Vector3d p = camera + t * dir;
          hit.local = p;
          hit.face_axis = 1;
          hit.seed = spec.ground_seed;
          hit.valid = true;
        }
      }
      for (const MovedBox& b : boxes) {
        double t;
        int face;
        if (ray_aabb(camera, dir, b.lo, b.hi, t, face) && t < hit.t) {
          hit.t = t;
          hit.cls = b.cls;
          hit.local = camera + t * dir - b.center;
          hit.face_axis = face;
          hit.seed = b.seed;
          hit.valid = true;
          hit_object = b.index;
        }
      }

      Eigen::Vector3d color;
      if (!hit.valid) {
        color = base_color(static_cast<int>(SemClass::sky));
      } else {
        const TextureParams tex = hit.cls == static_cast<int>(SemClass::road) ? ground_tex
                                                                              : texture_params(hit.seed);
        double u, v;
        if (hit.face_axis == 0) { u = hit.local.y(); v = hit.local.z(); }
        else if (hit.face_axis == 1) { u = hit.local.x(); v = hit.local.z(); }
        else { u = hit.local.x(); v = hit.local.y(); }
        color = base_color(hit.cls) * texture_brightness(tex, u, v);
        depth[idx] = static_cast<float>(hit.t);  // dir_cam.z == 1, so t is camera-frame Z
        frame.semantic_gt[static_cast<std::size_t>(idx)] = static_cast<std::uint8_t>(hit.cls);
        frame.object_gt[static_cast<std::size_t>(idx)] = static_cast<std::int16_t>(hit_object);
      }
      for (int c = 0; c < 3; ++c)
        img[static_cast<std::int64_t>(c) * H * W + idx] =
            static_cast<float>(std::clamp(color[c], 0.0, 1.0));
    }
  });
  return frame;
}

Sequence make_dataset(const SceneSpec& spec) {
  if (spec.frames < 3) throw TensorError("make_dataset: need at least 3 frames for triplets");
  if (!spec.trajectory.poses.empty() &&
      static_cast<int>(spec.trajectory.poses.size()) != spec.frames)
    throw TensorError("make_dataset: trajectory pose count does not match frame count");
  Sequence seq;
  seq.intrinsics = spec.intrinsics;
  seq.frames.reserve(static_cast<std::size_t>(spec.frames));
  for (int t = 0; t < spec.frames; ++t) seq.frames.push_back(render(spec, t));
  return seq;
}

double surface_distance(const SceneSpec& spec, int frame_index, const Eigen::Vector3d& p) {
  double best = std::fabs(p.y());  // ground plane y = 0
  for (const Box& b : spec.boxes) {
    const Eigen::Vector3d c = b.center + frame_index * b.velocity;
    const Eigen::Vector3d lo = c - b.size / 2, hi = c + b.size / 2;
    // distance to the box shell
    Eigen::Vector3d q;
    for (int a = 0; a < 3; ++a) q[a] = std::max({lo[a] - p[a], 0.0, p[a] - hi[a]});
    double d = q.norm();
    if (d == 0.0) {
      double inner = std::numeric_limits<double>::infinity();
      for (int a = 0; a < 3; ++a) inner = std::min({inner, p[a] - lo[a], hi[a] - p[a]});
      d = inner;
    }
    best = std::min(best, d);
  }
  return best;
}

}  // namespace semguide::sim
