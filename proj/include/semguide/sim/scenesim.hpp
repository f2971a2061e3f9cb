// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "semguide/core/tensor.hpp"
#include "semguide/geometry/camera.hpp"
#include "semguide/geometry/pose.hpp"

namespace semguide::sim {

// World frame matches the camera frame at identity: x right, y down,
// z forward. The ground is the plane y = 0, so "above ground" means y < 0.

enum class SemClass : int { sky = 0, road = 1, building = 2, car = 3, pole = 4 };
inline constexpr int kNumClasses = 5;

const char* class_name(int id);

struct Box {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // meters, at frame 0
  Eigen::Vector3d size = Eigen::Vector3d::Ones();    // full extents
  int cls = static_cast<int>(SemClass::building);
  std::uint32_t texture_seed = 0;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // meters per frame
};

struct TrajectorySpec {
  std::vector<geo::PoseSE3> poses;  // explicit world->camera poses; wins when non-empty
  Eigen::Vector3d start{0, -1.5, 0};
  Eigen::Vector3d velocity{0, 0, 0.15};
  double pitch = 0.12;          // radians, positive looks toward the ground
  double yaw_amplitude = 0.0;   // radians of sinusoidal yaw wobble
  double yaw_period = 8.0;      // frames
};

struct SceneSpec {
  geo::Intrinsics intrinsics{120.0, 120.0, 80.0, 48.0, 160, 96};
  int frames = 16;
  TrajectorySpec trajectory;
  std::vector<Box> boxes;
  std::uint32_t ground_seed = 1;
};

struct FrameSample {
  Tensor<float> image;                  // [3,H,W] in [0,1]
  Tensor<float> depth_gt;               // [H,W] meters; 0 where invalid (sky)
  std::vector<std::uint8_t> semantic_gt;  // [H*W] class ids
  std::vector<std::int16_t> object_gt;  // [H*W] hit box index; -1 = ground or sky
  geo::PoseSE3 pose_gt;                 // world -> camera
};

struct Sequence {
  geo::Intrinsics intrinsics;
  std::vector<FrameSample> frames;

  /// Indices that own a (t-1, t, t+1) triplet.
  std::vector<int> triplet_centers() const {
    std::vector<int> out;
    for (int t = 1; t + 1 < static_cast<int>(frames.size()); ++t) out.push_back(t);
    return out;
  }
};

geo::PoseSE3 trajectory_pose(const SceneSpec& spec, int frame_index);

FrameSample render(const SceneSpec& spec, int frame_index);

Sequence make_dataset(const SceneSpec& spec);

/// Signed world-frame distance from a point to the nearest scene surface at
/// a frame (plane and box shells). Used to verify depth ground truth.
double surface_distance(const SceneSpec& spec, int frame_index, const Eigen::Vector3d& world_point);

SceneSpec parse_scene_spec(const std::string& json_text);
std::string scene_spec_to_json(const SceneSpec& spec);

}  // namespace semguide::sim
