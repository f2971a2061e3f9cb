// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

// Shared scene fixtures for tests and the acceptance suite.

#pragma once

#include "semguide/sim/scenesim.hpp"

namespace fixtures {

using semguide::sim::Box;
using semguide::sim::SceneSpec;
using semguide::sim::SemClass;

inline semguide::geo::Intrinsics toy_intrinsics(int width = 160, int height = 96) {
  semguide::geo::Intrinsics k;
  k.fx = k.fy = 0.75 * width;
  k.cx = width / 2.0;
  k.cy = height / 2.0;
  k.width = width;
  k.height = height;
  return k;
}

inline Box make_box(double x, double y_bottom, double z, double sx, double sy, double sz, SemClass cls,
                    std::uint32_t seed) {
  Box b;
  b.center = {x, -(y_bottom + sy / 2.0), z};  // y points down; boxes sit above the plane
  b.size = {sx, sy, sz};
  b.cls = static_cast<int>(cls);
  b.texture_seed = seed;
  return b;
}

/// Static desk scene: road, buildings left/right, parked cars, poles.
/// The camera drives forward with a slight downward pitch.
inline SceneSpec static_scene(int width = 160, int height = 96, int frames = 16) {
  SceneSpec spec;
  spec.intrinsics = toy_intrinsics(width, height);
  spec.frames = frames;
  spec.trajectory.start = {0.0, -1.5, 0.0};
  spec.trajectory.velocity = {0.0, 0.0, 0.18};
  spec.trajectory.pitch = 0.10;
  spec.ground_seed = 11;
  spec.boxes = {
      make_box(-3.2, 0.0, 8.0, 2.4, 3.4, 4.0, SemClass::building, 21),
      make_box(3.4, 0.0, 11.0, 2.6, 4.2, 5.0, SemClass::building, 22),
      make_box(-2.6, 0.0, 16.5, 2.2, 2.8, 3.6, SemClass::building, 23),
      make_box(3.0, 0.0, 21.0, 2.8, 3.8, 4.4, SemClass::building, 24),
      make_box(-1.6, 0.0, 7.0, 1.1, 0.9, 2.0, SemClass::car, 31),
      make_box(1.8, 0.0, 12.5, 1.1, 0.95, 2.1, SemClass::car, 32),
      make_box(-1.9, 0.0, 18.0, 1.15, 0.9, 2.0, SemClass::car, 33),
      make_box(1.2, 0.0, 5.2, 0.14, 2.2, 0.14, SemClass::pole, 41),
      make_box(-1.3, 0.0, 10.5, 0.14, 2.4, 0.14, SemClass::pole, 42),
      make_box(1.5, 0.0, 16.0, 0.14, 2.3, 0.14, SemClass::pole, 43),
  };
  return spec;
}

/// Same layout, all-ground view (camera pitched down enough that no sky is
/// visible). Used where textureless sky would dilute photometric statistics.
inline SceneSpec groundward_scene(int width = 96, int height = 64, int frames = 6) {
  SceneSpec spec = static_scene(width, height, frames);
  spec.intrinsics = toy_intrinsics(width, height);
  spec.trajectory.pitch = 0.55;
  spec.boxes.clear();
  spec.boxes = {
      make_box(-1.4, 0.0, 4.0, 1.2, 0.8, 1.6, SemClass::car, 51),
      make_box(1.5, 0.0, 5.5, 1.2, 0.8, 1.6, SemClass::building, 52),
  };
  return spec;
}

/// A lead vehicle moving exactly with the camera. With a translation-only
/// camera its pixels never change; with yaw wobble it shows rotation-only
/// flow, which a depth network can only explain by pushing it far away.
inline SceneSpec follower_scene(int width = 160, int height = 96, int frames = 16,
                                double yaw_amplitude = 0.035) {
  SceneSpec spec = static_scene(width, height, frames);
  spec.trajectory.yaw_amplitude = yaw_amplitude;
  spec.trajectory.yaw_period = 7.0;
  Box follower = make_box(0.15, 0.0, 6.5, 1.9, 1.6, 2.6, SemClass::car, 61);
  follower.velocity = spec.trajectory.velocity;
  spec.boxes.push_back(follower);
  return spec;
}

}  // namespace fixtures
