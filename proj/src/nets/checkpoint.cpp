// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "semguide/io/image_io.hpp"
#include "semguide/io/tensor_io.hpp"
#include "semguide/nets/train.hpp"

namespace semguide::nets {

std::uint64_t ParamSet::content_hash() const {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    h = fnv1a(names_[i], h);
    const Tensor32& t = values_[i];
    for (int d = 0; d < t.rank(); ++d) {
      const std::uint64_t e = static_cast<std::uint64_t>(t.extent(d));
      h = fnv1a(&e, sizeof(e), h);
    }
    h = fnv1a(t.data(), sizeof(float) * static_cast<std::size_t>(t.size()), h);
  }
  return h;
}

void save_params(const ParamSet& params, const std::string& path) {
  std::ostringstream os;
  io::detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.names()[i];
    io::detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    io::write_tensor(os, params.value(i));
  }
  io::write_file_atomic(path, os.str());
}

ParamSet load_params(const std::string& path) {
  std::istringstream is(io::read_file(path));
  const auto count = io::detail::get_le<std::uint32_t>(is);
  ParamSet out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = io::detail::get_le<std::uint32_t>(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    out.add(name, io::read_tensor<float>(is));
  }
  if (!is) throw TensorError("param file truncated: " + path);
  return out;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& dir) {
  std::filesystem::create_directories(dir);
  save_params(ckpt.depth, dir + "/depth.params");
  save_params(ckpt.pose, dir + "/pose.params");
  if (ckpt.heads.size()) save_params(ckpt.heads, dir + "/heads.params");
  if (ckpt.semantic.size()) save_params(ckpt.semantic, dir + "/semantic.params");

  nlohmann::json manifest;
  manifest["config"] = nlohmann::json::parse(ckpt.config.to_json());
  manifest["iterations_run"] = ckpt.iterations_run;
  manifest["semantic_hash"] = hex64(ckpt.semantic_hash);
  manifest["has_heads"] = ckpt.heads.size() > 0;
  manifest["has_semantic"] = ckpt.semantic.size() > 0;
  if (!ckpt.history.empty()) {
    const LossRow& last = ckpt.history.back();
    manifest["final_loss"] = last.total;
    manifest["final_mask_fraction"] = last.mask_fraction;
  }
  io::write_file_atomic(dir + "/manifest.json", manifest.dump(2));

  std::ostringstream csv;
  csv << "iteration,total,photometric,smoothness,mask_fraction\n";
  for (const LossRow& row : ckpt.history)
    csv << row.iteration << "," << row.total << "," << row.photometric << "," << row.smoothness << ","
        << row.mask_fraction << "\n";
  io::write_file_atomic(dir + "/training_log.csv", csv.str());
}

Checkpoint load_checkpoint(const std::string& dir) {
  Checkpoint ckpt;
  const nlohmann::json manifest = nlohmann::json::parse(io::read_file(dir + "/manifest.json"));
  ckpt.config = TrainConfig::from_json(manifest.at("config").dump());
  ckpt.iterations_run = manifest.at("iterations_run").get<int>();
  ckpt.semantic_hash = std::stoull(manifest.at("semantic_hash").get<std::string>(), nullptr, 16);
  ckpt.depth = load_params(dir + "/depth.params");
  ckpt.pose = load_params(dir + "/pose.params");
  if (manifest.value("has_heads", false)) ckpt.heads = load_params(dir + "/heads.params");
  if (manifest.value("has_semantic", false)) ckpt.semantic = load_params(dir + "/semantic.params");

  std::istringstream csv(io::read_file(dir + "/training_log.csv"));
  std::string line;
  std::getline(csv, line);  // header
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    LossRow row;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    ls >> row.iteration >> row.total >> row.photometric >> row.smoothness >> row.mask_fraction;
    ckpt.history.push_back(row);
  }
  return ckpt;
}

}  // namespace semguide::nets
