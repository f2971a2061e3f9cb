// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "semguide/core/tensor.hpp"

namespace semguide::eval {

/// The seven standard depth metrics. All dimensionless except rmse (meters).
struct DepthMetrics {
  double abs_rel = 0, sq_rel = 0, rmse = 0, rmse_log = 0;
  double delta1 = 0, delta2 = 0, delta3 = 0;
  std::int64_t pixel_count = 0;
};

struct EvalOptions {
  double cap = 80.0;        // evaluate only gt <= cap meters
  bool median_scale = true; // rescale pred by median(gt)/median(pred) first
  double clamp_min = 1e-3;  // pred clamped to [clamp_min, cap] after scaling
};

/// Metrics over pixels with mask != 0, gt > 0 and gt <= cap.
/// Delta thresholds use strict inequality: ratio exactly 1.25 counts toward
/// delta2 and delta3 but not delta1.
DepthMetrics compute_metrics(const Tensor<float>& pred, const Tensor<float>& gt,
                             const Tensor<float>& mask, const EvalOptions& opts = {});

struct ClassBinnedMetrics {
  std::map<int, DepthMetrics> per_class;  // only classes with pixels
  double class_average_abs_rel = 0;       // unweighted over non-empty classes
  DepthMetrics global;
};

/// Bin pixels by the semantic map and evaluate each bin separately. Median
/// scaling is computed once over the global valid set, then bins are scored
/// without further rescaling, so class-specific scale errors stay visible.
ClassBinnedMetrics class_binned(const Tensor<float>& pred, const Tensor<float>& gt,
                                const std::vector<std::uint8_t>& semantic, const Tensor<float>& mask,
                                const EvalOptions& opts = {});

/// Accumulate per-frame metrics into a pixel-weighted aggregate.
DepthMetrics aggregate(const std::vector<DepthMetrics>& frames);

}  // namespace semguide::eval
