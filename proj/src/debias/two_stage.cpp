// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#include "semguide/debias/two_stage.hpp"

namespace semguide::debias {

TwoStageResult two_stage_train(const std::vector<sim::Sequence>& dataset,
                               const nets::TrainConfig& config, const FilterOptions& filter_opts,
                               const nets::ParamSet* pretrained_semantic) {
  TwoStageResult out;
  out.stage1 = nets::train_depth_pose(dataset, config, pretrained_semantic);

  const nets::Checkpoint& stage1 = out.stage1;
  out.report = filter_dataset(
      [&stage1](const sim::FrameSample& frame) { return nets::predict_depth(stage1, frame); }, dataset,
      config.d_max, filter_opts);

  std::vector<int> kept;
  for (int i = 0; i < out.report.total_frames; ++i)
    if (!out.report.dropped(i)) kept.push_back(i);

  nets::TrainConfig stage2_config = config;
  stage2_config.seed = config.seed ^ 0x57A6E200DDull;  // from scratch, away from stage 1's optimum
  out.stage2 = nets::train_depth_pose(dataset, stage2_config, pretrained_semantic, {}, &kept);
  return out;
}

}  // namespace semguide::debias
