// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#include "semguide/io/dataset_io.hpp"

#include <cstdio>
#include <filesystem>
#include <json.hpp>

#include "semguide/io/image_io.hpp"

namespace semguide::io {

namespace {

std::string frame_stem(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04d", index);
  return buf;
}

}  // namespace

void save_dataset(const sim::Sequence& seq, const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json index;
  index["intrinsics"] = {{"fx", seq.intrinsics.fx}, {"fy", seq.intrinsics.fy},
                         {"cx", seq.intrinsics.cx}, {"cy", seq.intrinsics.cy},
                         {"width", seq.intrinsics.width}, {"height", seq.intrinsics.height}};
  nlohmann::json classes = nlohmann::json::array();
  for (int c = 0; c < sim::kNumClasses; ++c) classes.push_back(sim::class_name(c));
  index["classes"] = classes;
  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    const sim::FrameSample& f = seq.frames[t];
    const std::string stem = frame_stem(static_cast<int>(t));
    write_ppm(dir + "/" + stem + ".ppm", f.image);
    write_pfm(dir + "/" + stem + ".pfm", f.depth_gt);
    write_pgm(dir + "/" + stem + ".pgm", seq.intrinsics.height, seq.intrinsics.width, f.semantic_gt);
    frames.push_back({{"image", stem + ".ppm"},
                      {"depth", stem + ".pfm"},
                      {"labels", stem + ".pgm"},
                      {"pose", {{"rotation", {f.pose_gt.rotation.x(), f.pose_gt.rotation.y(),
                                              f.pose_gt.rotation.z()}},
                                {"translation", {f.pose_gt.translation.x(), f.pose_gt.translation.y(),
                                                 f.pose_gt.translation.z()}}}}});
  }
  index["frames"] = frames;
  write_file_atomic(dir + "/index.json", index.dump(2));
}

sim::Sequence load_dataset(const std::string& dir) {
  const nlohmann::json index = nlohmann::json::parse(read_file(dir + "/index.json"));
  sim::Sequence seq;
  const nlohmann::json& k = index.at("intrinsics");
  seq.intrinsics.fx = k.at("fx").get<double>();
  seq.intrinsics.fy = k.at("fy").get<double>();
  seq.intrinsics.cx = k.at("cx").get<double>();
  seq.intrinsics.cy = k.at("cy").get<double>();
  seq.intrinsics.width = k.at("width").get<int>();
  seq.intrinsics.height = k.at("height").get<int>();
  seq.intrinsics.validate();
  for (const nlohmann::json& f : index.at("frames")) {
    sim::FrameSample frame;
    frame.image = read_ppm(dir + "/" + f.at("image").get<std::string>());
    frame.depth_gt = read_pfm(dir + "/" + f.at("depth").get<std::string>());
    int h = 0, w = 0;
    frame.semantic_gt = read_pgm(dir + "/" + f.at("labels").get<std::string>(), h, w);
    if (h != seq.intrinsics.height || w != seq.intrinsics.width)
      throw TensorError("dataset: label extents disagree with intrinsics");
    const nlohmann::json& p = f.at("pose");
    for (int i = 0; i < 3; ++i) {
      frame.pose_gt.rotation[i] = p.at("rotation")[static_cast<std::size_t>(i)].get<double>();
      frame.pose_gt.translation[i] = p.at("translation")[static_cast<std::size_t>(i)].get<double>();
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

}  // namespace semguide::io
