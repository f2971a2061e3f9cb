// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#include "semguide/nets/networks.hpp"

#include <json.hpp>

#include "semguide/core/nn_ops.hpp"
#include "semguide/core/ops.hpp"
#include "semguide/pac/pac.hpp"

namespace semguide::nets {

void TrainConfig::validate() const {
  if (!(lr_depth > 0 && lr_pose > 0)) throw TensorError("config: learning rates must be positive");
  if (iterations < 1 || batch_size < 1) throw TensorError("config: iterations/batch_size must be >= 1");
  if (!(d_min > 0 && d_min < d_max)) throw TensorError("config: need 0 < d_min < d_max");
  if (pyramid_levels < 1 || pyramid_levels > 4) throw TensorError("config: pyramid_levels in [1,4]");
  if (!(alpha >= 0 && alpha <= 1)) throw TensorError("config: alpha in [0,1]");
  if (lambda1 < 0) throw TensorError("config: lambda1 must be >= 0");
  if (guidance_channels < 1) throw TensorError("config: guidance_channels must be >= 1");
  if (gn_groups < 1 || guidance_channels % gn_groups != 0)
    throw TensorError("config: gn_groups must divide guidance_channels");
  if (pac_enabled.size() != 4) throw TensorError("config: pac_enabled needs 4 entries");
  if (guidance_source != "pretrained" && guidance_source != "untrained" &&
      guidance_source != "oracle-labels" && guidance_source != "none")
    throw TensorError("config: unknown guidance_source '" + guidance_source + "'");
}

std::string TrainConfig::to_json() const {
  nlohmann::json j;
  j["lr_depth"] = lr_depth;
  j["lr_pose"] = lr_pose;
  j["iterations"] = iterations;
  j["batch_size"] = batch_size;
  j["seed"] = seed;
  j["guidance_source"] = guidance_source;
  j["pyramid_levels"] = pyramid_levels;
  j["d_min"] = d_min;
  j["d_max"] = d_max;
  j["alpha"] = alpha;
  j["lambda1"] = lambda1;
  j["guidance_channels"] = guidance_channels;
  j["gn_groups"] = gn_groups;
  j["pac_enabled"] = pac_enabled;
  j["lr_halving_fraction"] = lr_halving_fraction;
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  TrainConfig c;
  static const char* known[] = {"lr_depth", "lr_pose", "iterations", "batch_size", "seed",
                                "guidance_source", "pyramid_levels", "d_min", "d_max", "alpha",
                                "lambda1", "guidance_channels", "gn_groups", "pac_enabled",
                                "lr_halving_fraction"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) ok = true;
    if (!ok) throw TensorError("config: unknown key '" + it.key() + "'");
  }
  c.lr_depth = j.value("lr_depth", c.lr_depth);
  c.lr_pose = j.value("lr_pose", c.lr_pose);
  c.iterations = j.value("iterations", c.iterations);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.guidance_source = j.value("guidance_source", c.guidance_source);
  c.pyramid_levels = j.value("pyramid_levels", c.pyramid_levels);
  c.d_min = j.value("d_min", c.d_min);
  c.d_max = j.value("d_max", c.d_max);
  c.alpha = j.value("alpha", c.alpha);
  c.lambda1 = j.value("lambda1", c.lambda1);
  c.guidance_channels = j.value("guidance_channels", c.guidance_channels);
  c.gn_groups = j.value("gn_groups", c.gn_groups);
  if (j.contains("pac_enabled")) c.pac_enabled = j["pac_enabled"].get<std::vector<int>>();
  c.lr_halving_fraction = j.value("lr_halving_fraction", c.lr_halving_fraction);
  c.validate();
  return c;
}

double sigmoid_to_depth(double x, double d_min, double d_max) {
  if (!(d_min > 0 && d_min < d_max)) throw TensorError("sigmoid_to_depth: need 0 < d_min < d_max");
  if (!(x >= 0 && x <= 1)) throw TensorError("sigmoid_to_depth: activation outside [0,1]");
  return 1.0 / (1.0 / d_max + x * (1.0 / d_min - 1.0 / d_max));
}

Tensor32 activation_to_inv_depth(const Tensor32& x, double d_min, double d_max) {
  if (!(d_min > 0 && d_min < d_max)) throw TensorError("activation_to_inv_depth: bad depth range");
  const float lo = static_cast<float>(1.0 / d_max);
  const float span = static_cast<float>(1.0 / d_min - 1.0 / d_max);
  return add(mul(x, Tensor32::full({1}, span)), Tensor32::full({1}, lo));
}

void init_depth_params(ParamSet& p, const TrainConfig& config, std::uint64_t seed) {
  int in_ch = 3;
  for (int s = 0; s < 4; ++s) {
    p.create_conv("depth.enc" + std::to_string(s) + ".w", kEncoderWidths[s], in_ch, 3, seed);
    p.create_full("depth.enc" + std::to_string(s) + ".b", {kEncoderWidths[s]}, 0.0f);
    in_ch = kEncoderWidths[s];
  }
  for (int s = 3; s >= 0; --s) {
    const int up_ch = s == 3 ? kEncoderWidths[3] : kDecoderWidths[s + 1];
    const int skip_ch = s == 0 ? 0 : kEncoderWidths[s - 1];
    const int in = up_ch + skip_ch;
    const int out = kDecoderWidths[s];
    const std::string base = "depth.dec" + std::to_string(s);
    p.create_conv(base + ".w", out, in, 3, seed);
    p.create_full(base + ".b", {out}, 0.0f);
    p.create_full(base + ".logsigma", {out}, 0.0f);
    p.create_conv("depth.head" + std::to_string(s) + ".w", 1, out, 1, seed);
    p.create_full("depth.head" + std::to_string(s) + ".b", {1}, 0.0f);
  }
  (void)config;
}

void init_pose_params(ParamSet& p, std::uint64_t seed) {
  const int widths[3] = {16, 32, 64};
  int in_ch = 6;
  for (int s = 0; s < 3; ++s) {
    p.create_conv("pose.enc" + std::to_string(s) + ".w", widths[s], in_ch, 3, seed);
    p.create_full("pose.enc" + std::to_string(s) + ".b", {widths[s]}, 0.0f);
    in_ch = widths[s];
  }
  // small head keeps the initial pose well inside the near-identity bound
  Tensor32& head = p.create_matrix("pose.head.w", 64, 6, seed);
  for (std::int64_t i = 0; i < head.size(); ++i) head[i] *= 0.1f;
  p.create_full("pose.head.b", {6}, 0.0f);
}

void init_semantic_params(ParamSet& p, std::uint64_t seed) {
  const int enc[3] = {16, 32, 64};
  int in_ch = 3;
  for (int s = 0; s < 3; ++s) {
    p.create_conv("sem.enc" + std::to_string(s) + ".w", enc[s], in_ch, 3, seed);
    p.create_full("sem.enc" + std::to_string(s) + ".b", {enc[s]}, 0.0f);
    in_ch = enc[s];
  }
  const int dec[3] = {32, 16, 16};
  in_ch = 64;
  for (int s = 0; s < 3; ++s) {
    p.create_conv("sem.dec" + std::to_string(s) + ".w", dec[s], in_ch, 3, seed);
    p.create_full("sem.dec" + std::to_string(s) + ".b", {dec[s]}, 0.0f);
    in_ch = dec[s];
  }
  p.create_conv("sem.cls.w", sim::kNumClasses, 16, 1, seed);
  p.create_full("sem.cls.b", {sim::kNumClasses}, 0.0f);
}

void init_guidance_head_params(ParamSet& p, const std::vector<int>& input_widths,
                               const TrainConfig& config, std::uint64_t seed) {
  const int D = config.guidance_channels;
  const int mid = 16;
  for (std::size_t l = 0; l < input_widths.size(); ++l) {
    const std::string base = "ghead" + std::to_string(l);
    p.create_conv(base + ".c3w", mid, input_widths[l], 3, seed);
    p.create_full(base + ".c3b", {mid}, 0.0f);
    p.create_conv(base + ".c1w", D, mid, 1, seed);
    p.create_full(base + ".c1b", {D}, 0.0f);
    p.create_full(base + ".gng", {D}, 1.0f);
    p.create_full(base + ".gnb", {D}, 0.0f);
  }
}

namespace {

Tensor32 conv_block(BoundParams& p, const std::string& base, const Tensor32& x, int stride, int pad) {
  return elu(conv2d(x, p.get(base + ".w"), p.get(base + ".b"), stride, pad));
}

Tensor32 as_nchw(const Tensor32& image) {
  if (image.rank() == 3) return reshape(image, {1, image.extent(0), image.extent(1), image.extent(2)});
  return image;
}

}  // namespace

std::vector<Tensor32> depth_forward(BoundParams& params, const Tensor32& image,
                                    const std::vector<Tensor32>& guidance, const TrainConfig& config) {
  Tensor32 x = as_nchw(image);
  const int H = x.extent(2), W = x.extent(3);
  if (H % 16 != 0 || W % 16 != 0) throw ShapeError("depth_forward: extents must be multiples of 16");

  std::vector<Tensor32> skips;
  for (int s = 0; s < 4; ++s) {
    x = conv_block(params, "depth.enc" + std::to_string(s), x, 2, 1);
    skips.push_back(x);
  }

  std::vector<Tensor32> disparity(4);
  Tensor32 d = skips[3];
  for (int s = 3; s >= 0; --s) {
    d = upsample_bilinear(d, 2);
    if (s > 0) d = concat<float>({d, skips[static_cast<std::size_t>(s - 1)]}, 1);
    const std::string base = "depth.dec" + std::to_string(s);
    pac::PacParams<float> pp{params.get(base + ".w"), params.get(base + ".b"),
                             params.get(base + ".logsigma")};
    Tensor32 g;
    const bool use_map = config.pac_enabled[static_cast<std::size_t>(s)] != 0 &&
                         static_cast<std::size_t>(s) < guidance.size() &&
                         guidance[static_cast<std::size_t>(s)].defined();
    if (use_map) {
      g = guidance[static_cast<std::size_t>(s)];
      if (g.extent(2) != d.extent(2) || g.extent(3) != d.extent(3))
        throw ShapeError("depth_forward: guidance resolution mismatch at stage " + std::to_string(s));
    } else {
      g = Tensor32::zeros({1, 1, d.extent(2), d.extent(3)});
    }
    d = elu(pac::pac_forward(d, g, pp));
    Tensor32 act = sigmoid(conv2d(d, params.get("depth.head" + std::to_string(s) + ".w"),
                                  params.get("depth.head" + std::to_string(s) + ".b"), 1, 0));
    disparity[static_cast<std::size_t>(s)] =
        reshape(activation_to_inv_depth(act, config.d_min, config.d_max),
                {act.extent(2), act.extent(3)});
  }

  std::vector<Tensor32> pyramid;
  for (int s = 0; s < config.pyramid_levels; ++s) pyramid.push_back(disparity[static_cast<std::size_t>(s)]);
  return pyramid;
}

Tensor32 pose_forward(BoundParams& params, const Tensor32& target, const Tensor32& source) {
  if (target.shape() != source.shape()) throw ShapeError("pose_forward: image shapes differ");
  Tensor32 x = concat<float>({as_nchw(target), as_nchw(source)}, 1);
  for (int s = 0; s < 3; ++s) x = conv_block(params, "pose.enc" + std::to_string(s), x, 2, 1);
  const int C = x.extent(1), h = x.extent(2), w = x.extent(3);
  Tensor32 pooled = mul(sum_axis(sum_axis(x, 3), 2), Tensor32::full({1}, 1.0f / static_cast<float>(h * w)));
  Tensor32 out = add(matmul(reshape(pooled, {1, C}), params.get("pose.head.w")),
                     reshape(params.get("pose.head.b"), {1, 6}));
  return reshape(mul(out, Tensor32::full({1}, 0.01f)), {6});
}

SemanticOutput semantic_forward(BoundParams& params, const Tensor32& image) {
  Tensor32 x = as_nchw(image);
  for (int s = 0; s < 3; ++s) x = conv_block(params, "sem.enc" + std::to_string(s), x, 2, 1);
  SemanticOutput out;
  out.features.push_back(x);  // H/8
  for (int s = 0; s < 3; ++s) {
    x = upsample_bilinear(x, 2);
    x = conv_block(params, "sem.dec" + std::to_string(s), x, 1, 1);
    out.features.push_back(x);  // H/4, H/2, H
  }
  out.logits = conv2d(x, params.get("sem.cls.w"), params.get("sem.cls.b"), 1, 0);
  return out;
}

GuidanceSource::GuidanceSource(const TrainConfig& config, const ParamSet* frozen_semantic,
                               std::uint64_t seed)
    : config_(config), semantic_(frozen_semantic) {
  if (config_.guidance_source == "oracle-labels") {
    label_embedding_ = Tensor32::zeros({config_.guidance_channels, sim::kNumClasses});
    Rng rng = named_stream(seed, "oracle.embedding");
    for (std::int64_t i = 0; i < label_embedding_.size(); ++i)
      label_embedding_[i] = static_cast<float>(rng.normal() * 0.5);
  } else if (config_.guidance_source == "pretrained" || config_.guidance_source == "untrained") {
    if (!semantic_) throw TensorError("guidance source '" + config_.guidance_source +
                                      "' needs semantic network parameters");
  }
}

std::vector<int> GuidanceSource::head_input_widths() const {
  if (config_.guidance_source == "oracle-labels")
    return std::vector<int>(4, config_.guidance_channels);
  return {kSemanticFeatureWidths[0], kSemanticFeatureWidths[1], kSemanticFeatureWidths[2],
          kSemanticFeatureWidths[3]};
}

std::vector<Tensor32> GuidanceSource::frozen_features(const sim::FrameSample& frame) {
  auto it = cache_.find(&frame);
  if (it != cache_.end()) return it->second;

  std::vector<Tensor32> feats;
  const int H = frame.image.extent(1), W = frame.image.extent(2);
  if (config_.guidance_source == "oracle-labels") {
    // nearest-subsampled one-hot labels through the fixed linear embedding
    for (int s = 3; s >= 0; --s) {
      const int step = 1 << s;
      const int h = H / step, w = W / step;
      Tensor32 embedded = Tensor32::zeros({1, config_.guidance_channels, h, w});
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const int cls = frame.semantic_gt[static_cast<std::size_t>(y * step) * W + x * step];
          for (int d = 0; d < config_.guidance_channels; ++d)
            embedded[(static_cast<std::int64_t>(d) * h + y) * w + x] =
                label_embedding_[static_cast<std::int64_t>(d) * sim::kNumClasses + cls];
        }
      feats.push_back(embedded);
    }
  } else {
    BoundParams frozen(*semantic_, nullptr);
    feats = semantic_forward(frozen, frame.image).features;
  }
  cache_.emplace(&frame, feats);
  return feats;
}

std::vector<Tensor32> GuidanceSource::guidance(const sim::FrameSample& frame, BoundParams* heads) {
  if (config_.guidance_source == "none") return {};
  std::vector<Tensor32> feats = frozen_features(frame);
  if (!heads) throw TensorError("guidance: head parameters required");
  std::vector<Tensor32> maps;
  for (std::size_t l = 0; l < feats.size(); ++l) {
    const std::string base = "ghead" + std::to_string(l);
    pac::GuidanceHeadParams<float> hp;
    hp.conv3_w = heads->get(base + ".c3w");
    hp.conv3_b = heads->get(base + ".c3b");
    hp.conv1_w = heads->get(base + ".c1w");
    hp.conv1_b = heads->get(base + ".c1b");
    hp.gn_gamma = heads->get(base + ".gng");
    hp.gn_beta = heads->get(base + ".gnb");
    hp.groups = config_.gn_groups;
    maps.push_back(pac::guidance_head(feats[l], hp));
  }
  // reorder to decoder-stage indexing: entry s guides the stage at H/2^s
  return {maps[3], maps[2], maps[1], maps[0]};
}

}  // namespace semguide::nets
