// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#include <json.hpp>

#include "semguide/sim/scenesim.hpp"

namespace semguide::sim {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known, const char* where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) ok = true;
    if (!ok) throw TensorError(std::string("scene spec: unknown key '") + it.key() + "' in " + where);
  }
}

Eigen::Vector3d vec3(const json& a, const char* where) {
  if (!a.is_array() || a.size() != 3)
    throw TensorError(std::string("scene spec: ") + where + " must be a 3-element array");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

int class_id(const std::string& name) {
  for (int i = 0; i < kNumClasses; ++i)
    if (name == class_name(i)) return i;
  throw TensorError("scene spec: unknown class '" + name + "'");
}

}  // namespace

SceneSpec parse_scene_spec(const std::string& json_text) {
  json doc = json::parse(json_text);  // malformed JSON throws json::parse_error
  SceneSpec spec;
  reject_unknown_keys(doc, {"intrinsics", "frames", "trajectory", "boxes", "ground_seed"}, "root");
  if (doc.contains("intrinsics")) {
    const json& k = doc["intrinsics"];
    reject_unknown_keys(k, {"fx", "fy", "cx", "cy", "width", "height"}, "intrinsics");
    spec.intrinsics.fx = k.value("fx", spec.intrinsics.fx);
    spec.intrinsics.fy = k.value("fy", spec.intrinsics.fy);
    spec.intrinsics.cx = k.value("cx", spec.intrinsics.cx);
    spec.intrinsics.cy = k.value("cy", spec.intrinsics.cy);
    spec.intrinsics.width = k.value("width", spec.intrinsics.width);
    spec.intrinsics.height = k.value("height", spec.intrinsics.height);
  }
  spec.frames = doc.value("frames", spec.frames);
  spec.ground_seed = doc.value("ground_seed", spec.ground_seed);
  if (doc.contains("trajectory")) {
    const json& t = doc["trajectory"];
    reject_unknown_keys(t, {"start", "velocity", "pitch", "yaw_amplitude", "yaw_period", "poses"},
                        "trajectory");
    if (t.contains("start")) spec.trajectory.start = vec3(t["start"], "trajectory.start");
    if (t.contains("velocity")) spec.trajectory.velocity = vec3(t["velocity"], "trajectory.velocity");
    spec.trajectory.pitch = t.value("pitch", spec.trajectory.pitch);
    spec.trajectory.yaw_amplitude = t.value("yaw_amplitude", spec.trajectory.yaw_amplitude);
    spec.trajectory.yaw_period = t.value("yaw_period", spec.trajectory.yaw_period);
    if (t.contains("poses")) {
      for (const json& p : t["poses"]) {
        reject_unknown_keys(p, {"rotation", "translation"}, "trajectory.poses[]");
        geo::PoseSE3 pose;
        pose.rotation = vec3(p["rotation"], "pose.rotation");
        pose.translation = vec3(p["translation"], "pose.translation");
        spec.trajectory.poses.push_back(pose);
      }
    }
  }
  if (doc.contains("boxes")) {
    for (const json& b : doc["boxes"]) {
      reject_unknown_keys(b, {"center", "size", "class", "texture_seed", "velocity"}, "boxes[]");
      Box box;
      box.center = vec3(b["center"], "box.center");
      box.size = vec3(b["size"], "box.size");
      if (b.contains("class")) box.cls = class_id(b["class"].get<std::string>());
      box.texture_seed = b.value("texture_seed", box.texture_seed);
      if (b.contains("velocity")) box.velocity = vec3(b["velocity"], "box.velocity");
      spec.boxes.push_back(box);
    }
  }
  return spec;
}

std::string scene_spec_to_json(const SceneSpec& spec) {
  json doc;
  doc["intrinsics"] = {{"fx", spec.intrinsics.fx}, {"fy", spec.intrinsics.fy},
                       {"cx", spec.intrinsics.cx}, {"cy", spec.intrinsics.cy},
                       {"width", spec.intrinsics.width}, {"height", spec.intrinsics.height}};
  doc["frames"] = spec.frames;
  doc["ground_seed"] = spec.ground_seed;
  json traj;
  traj["start"] = {spec.trajectory.start.x(), spec.trajectory.start.y(), spec.trajectory.start.z()};
  traj["velocity"] = {spec.trajectory.velocity.x(), spec.trajectory.velocity.y(),
                      spec.trajectory.velocity.z()};
  traj["pitch"] = spec.trajectory.pitch;
  traj["yaw_amplitude"] = spec.trajectory.yaw_amplitude;
  traj["yaw_period"] = spec.trajectory.yaw_period;
  if (!spec.trajectory.poses.empty()) {
    json poses = json::array();
    for (const geo::PoseSE3& p : spec.trajectory.poses)
      poses.push_back({{"rotation", {p.rotation.x(), p.rotation.y(), p.rotation.z()}},
                       {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}}});
    traj["poses"] = poses;
  }
  doc["trajectory"] = traj;
  json boxes = json::array();
  for (const Box& b : spec.boxes)
    boxes.push_back({{"center", {b.center.x(), b.center.y(), b.center.z()}},
                     {"size", {b.size.x(), b.size.y(), b.size.z()}},
                     {"class", class_name(b.cls)},
                     {"texture_seed", b.texture_seed},
                     {"velocity", {b.velocity.x(), b.velocity.y(), b.velocity.z()}}});
  doc["boxes"] = boxes;
  return doc.dump(2);
}

}  // namespace semguide::sim
