// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "semguide/debias/debias.hpp"
#include "semguide/nets/train.hpp"

namespace semguide::debias {

struct TwoStageResult {
  nets::Checkpoint stage1;
  FilterReport report;
  nets::Checkpoint stage2;
};

/// Train on everything, audit each frame's predicted cloud against a RANSAC
/// ground plane, drop offenders, retrain from scratch on the kept frames
/// with a fresh seed (same configuration otherwise).
TwoStageResult two_stage_train(const std::vector<sim::Sequence>& dataset,
                               const nets::TrainConfig& config,
                               const FilterOptions& filter_opts = {},
                               const nets::ParamSet* pretrained_semantic = nullptr);

}  // namespace semguide::debias
