// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "semguide/nets/networks.hpp"
#include "semguide/sim/scenesim.hpp"

namespace semguide::nets {

struct LossRow {
  int iteration = 0;
  double total = 0, photometric = 0, smoothness = 0, mask_fraction = 0;
};

struct Checkpoint {
  TrainConfig config;
  ParamSet depth;
  ParamSet pose;
  ParamSet heads;     // empty when guidance_source == none
  ParamSet semantic;  // frozen copy, empty unless (un/pre)trained guidance
  std::vector<LossRow> history;
  std::uint64_t semantic_hash = 0;
  int iterations_run = 0;
};

/// Test hooks: replace the depth prediction or the poses (oracle
/// substitution) or the guidance maps (constant-guidance equivalence runs).
struct TrainHooks {
  std::function<std::vector<Tensor32>(const sim::FrameSample&)> depth_override;
  std::function<Tensor32(const sim::FrameSample& target, const sim::FrameSample& source)> pose_override;
  std::function<std::vector<Tensor32>(const sim::FrameSample&, int height, int width)> guidance_override;
};

/// Simultaneous self-supervised depth + pose training over (t-1, t, t+1)
/// triplets. `kept_frames`, when given, holds global frame indices that
/// survive dataset filtering; a triplet is usable only if all three frames
/// are kept. Aborts with a NumericError naming the offending term when the
/// loss goes non-finite.
Checkpoint train_depth_pose(const std::vector<sim::Sequence>& dataset, const TrainConfig& config,
                            const ParamSet* pretrained_semantic = nullptr,
                            const TrainHooks& hooks = {},
                            const std::vector<int>* kept_frames = nullptr);

struct SemanticPretrainResult {
  ParamSet params;  // frozen from here on
  std::vector<double> epoch_cross_entropy;
  double holdout_accuracy = 0;
  std::uint64_t content_hash = 0;
};

/// Supervised per-pixel cross-entropy on rendered labels; the resulting
/// parameters are the frozen guidance network.
SemanticPretrainResult pretrain_semantic(const std::vector<sim::Sequence>& data, int epochs,
                                         std::uint64_t seed,
                                         const std::vector<sim::Sequence>& holdout = {});

/// Full-resolution depth map (meters) for one frame under a checkpoint.
Tensor32 predict_depth(const Checkpoint& ckpt, const sim::FrameSample& frame);

/// Per-pixel argmax class prediction of a frozen semantic network.
std::vector<std::uint8_t> predict_semantic(const ParamSet& semantic, const Tensor32& image);

void save_checkpoint(const Checkpoint& ckpt, const std::string& dir);
Checkpoint load_checkpoint(const std::string& dir);

void save_params(const ParamSet& params, const std::string& path);
ParamSet load_params(const std::string& path);

}  // namespace semguide::nets
