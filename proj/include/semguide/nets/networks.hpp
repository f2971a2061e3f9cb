// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "semguide/nets/params.hpp"
#include "semguide/sim/scenesim.hpp"

namespace semguide::nets {

/// Training-run configuration. `pac_enabled` is indexed by decoder stage,
/// entry 0 = the full-resolution stage, entry 3 = the coarsest.
struct TrainConfig {
  double lr_depth = 2e-4;
  double lr_pose = 5e-4;
  int iterations = 1500;
  int batch_size = 2;
  std::uint64_t seed = 1;
  std::string guidance_source = "none";  // pretrained | untrained | oracle-labels | none
  int pyramid_levels = 4;
  double d_min = 0.1;
  double d_max = 100.0;
  double alpha = 0.85;
  double lambda1 = 1e-3;
  int guidance_channels = 8;
  int gn_groups = 2;
  std::vector<int> pac_enabled = {1, 1, 1, 1};
  double lr_halving_fraction = 0.6;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
};

inline constexpr int kEncoderWidths[4] = {16, 32, 64, 128};
inline constexpr int kDecoderWidths[4] = {16, 16, 32, 64};  // stage 0..3 outputs
inline constexpr int kSemanticFeatureWidths[4] = {64, 32, 16, 16};  // coarse -> fine

/// Inverse-depth interpolation: 1/d = 1/d_max + x (1/d_min - 1/d_max).
/// Monotone: larger activation means smaller depth.
double sigmoid_to_depth(double x, double d_min, double d_max);
Tensor32 activation_to_inv_depth(const Tensor32& x, double d_min, double d_max);

void init_depth_params(ParamSet& params, const TrainConfig& config, std::uint64_t seed);
void init_pose_params(ParamSet& params, std::uint64_t seed);
void init_semantic_params(ParamSet& params, std::uint64_t seed);
/// Heads consume the per-level guidance inputs (widths depend on the source).
void init_guidance_head_params(ParamSet& params, const std::vector<int>& input_widths,
                               const TrainConfig& config, std::uint64_t seed);

/// Encoder-decoder depth net with PAC-guided decoder. `guidance` is indexed
/// by decoder stage (0 = full resolution); stages with PAC disabled (or an
/// undefined map) fall back to constant guidance, the conv special case.
/// Returns the inverse-depth pyramid, finest level first.
std::vector<Tensor32> depth_forward(BoundParams& params, const Tensor32& image,
                                    const std::vector<Tensor32>& guidance, const TrainConfig& config);

/// 6-DoF pose (axis-angle, translation), scaled by 0.01 so a fresh network
/// starts near the identity.
Tensor32 pose_forward(BoundParams& params, const Tensor32& target, const Tensor32& source);

struct SemanticOutput {
  Tensor32 logits;                 // [1,num_classes,H,W]
  std::vector<Tensor32> features;  // decoder taps, coarse -> fine (H/8 .. H)
};

SemanticOutput semantic_forward(BoundParams& params, const Tensor32& image);

/// Supplies per-decoder-stage guidance maps for one frame. Frozen feature
/// extraction is cached per frame; the trainable heads rerun per pass.
class GuidanceSource {
 public:
  GuidanceSource(const TrainConfig& config, const ParamSet* frozen_semantic, std::uint64_t seed);

  bool has_heads() const { return config_.guidance_source != "none"; }
  std::vector<int> head_input_widths() const;

  /// Frozen per-level inputs to the guidance heads (constants).
  std::vector<Tensor32> frozen_features(const sim::FrameSample& frame);

  /// Final guidance maps; taped through `heads` when it carries a tape.
  std::vector<Tensor32> guidance(const sim::FrameSample& frame, BoundParams* heads);

 private:
  TrainConfig config_;
  const ParamSet* semantic_;
  Tensor32 label_embedding_;  // fixed random [D, num_classes] for oracle-labels
  std::map<const void*, std::vector<Tensor32>> cache_;
};

}  // namespace semguide::nets
