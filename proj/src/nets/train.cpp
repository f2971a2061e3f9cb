// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#include "semguide/nets/train.hpp"

#include <algorithm>

#include "semguide/core/nn_ops.hpp"
#include "semguide/core/ops.hpp"
#include "semguide/loss/objective.hpp"

namespace semguide::nets {

namespace {

struct Triplet {
  int seq = 0;
  int center = 0;  // frame index within the sequence
};

std::vector<Triplet> usable_triplets(const std::vector<sim::Sequence>& dataset,
                                     const std::vector<int>* kept_frames) {
  std::vector<char> kept;
  int total = 0;
  for (const sim::Sequence& s : dataset) total += static_cast<int>(s.frames.size());
  kept.assign(static_cast<std::size_t>(total), kept_frames ? 0 : 1);
  if (kept_frames)
    for (int idx : *kept_frames)
      if (idx >= 0 && idx < total) kept[static_cast<std::size_t>(idx)] = 1;

  std::vector<Triplet> out;
  int base = 0;
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    const int n = static_cast<int>(dataset[s].frames.size());
    for (int t = 1; t + 1 < n; ++t)
      if (kept[static_cast<std::size_t>(base + t - 1)] && kept[static_cast<std::size_t>(base + t)] &&
          kept[static_cast<std::size_t>(base + t + 1)])
        out.push_back({static_cast<int>(s), t});
    base += n;
  }
  return out;
}

std::vector<Tensor32> constant_guidance(int height, int width) {
  std::vector<Tensor32> g;
  for (int s = 0; s < 4; ++s)
    g.push_back(Tensor32::zeros({1, 1, height >> s, width >> s}));
  return g;
}

}  // namespace

Checkpoint train_depth_pose(const std::vector<sim::Sequence>& dataset, const TrainConfig& config,
                            const ParamSet* pretrained_semantic, const TrainHooks& hooks,
                            const std::vector<int>* kept_frames) {
  config.validate();
  if (dataset.empty()) throw TensorError("train: empty dataset");
  const geo::Intrinsics K = dataset[0].intrinsics;

  std::vector<Triplet> triplets = usable_triplets(dataset, kept_frames);
  if (static_cast<int>(triplets.size()) < 3)
    throw TensorError("train: fewer than 3 usable triplets after filtering (" +
                      std::to_string(triplets.size()) + ")");

  Checkpoint ckpt;
  ckpt.config = config;
  init_depth_params(ckpt.depth, config, config.seed);
  init_pose_params(ckpt.pose, config.seed);

  std::optional<GuidanceSource> guidance_source;
  if (config.guidance_source == "pretrained") {
    if (!pretrained_semantic) throw TensorError("train: guidance_source=pretrained needs a semantic net");
    for (std::size_t i = 0; i < pretrained_semantic->size(); ++i)
      ckpt.semantic.add(pretrained_semantic->names()[i], pretrained_semantic->value(i).clone());
  } else if (config.guidance_source == "untrained") {
    init_semantic_params(ckpt.semantic, config.seed ^ 0x5EEDFACEull);
  }
  if (config.guidance_source != "none") {
    guidance_source.emplace(config, ckpt.semantic.size() ? &ckpt.semantic : nullptr, config.seed);
    init_guidance_head_params(ckpt.heads, guidance_source->head_input_widths(), config, config.seed);
  }
  ckpt.semantic_hash = ckpt.semantic.content_hash();

  Adam depth_opt(config.lr_depth);
  Adam heads_opt(config.lr_depth);  // heads belong to the trainable depth side
  Adam pose_opt(config.lr_pose);

  loss::LossWeights weights;
  weights.alpha = config.alpha;
  weights.lambda1 = config.lambda1;

  Rng order_rng(config.seed ^ 0x0D5EEDull);
  std::vector<std::size_t> order(triplets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t cursor = order.size();  // trigger shuffle on first use

  const int halve_at = static_cast<int>(config.lr_halving_fraction * config.iterations);
  for (int iter = 0; iter < config.iterations; ++iter) {
    const double lr_scale = iter >= halve_at ? 0.5 : 1.0;

    std::map<std::string, Tensor32> grad_acc;
    LossRow row;
    row.iteration = iter;
    for (int b = 0; b < config.batch_size; ++b) {
      if (cursor >= order.size()) {
        order_rng.shuffle(order.begin(), order.end());
        cursor = 0;
      }
      const Triplet trip = triplets[order[cursor++]];
      const sim::Sequence& seq = dataset[static_cast<std::size_t>(trip.seq)];
      const sim::FrameSample& target = seq.frames[static_cast<std::size_t>(trip.center)];
      const sim::FrameSample& prev = seq.frames[static_cast<std::size_t>(trip.center - 1)];
      const sim::FrameSample& next = seq.frames[static_cast<std::size_t>(trip.center + 1)];

      Tape<float> tape;
      BoundParams depth_params(ckpt.depth, &tape);
      BoundParams pose_params(ckpt.pose, &tape);
      BoundParams head_params(ckpt.heads, &tape);

      std::vector<Tensor32> guidance;
      if (hooks.guidance_override)
        guidance = hooks.guidance_override(target, K.height, K.width);
      else if (guidance_source)
        guidance = guidance_source->guidance(target, &head_params);
      else
        guidance = constant_guidance(K.height, K.width);

      std::vector<Tensor32> pyramid = hooks.depth_override
                                          ? hooks.depth_override(target)
                                          : depth_forward(depth_params, target.image, guidance, config);

      std::vector<Tensor32> sources{prev.image, next.image};
      std::vector<Tensor32> poses;
      if (hooks.pose_override) {
        poses = {hooks.pose_override(target, prev), hooks.pose_override(target, next)};
      } else {
        poses = {pose_forward(pose_params, target.image, prev.image),
                 pose_forward(pose_params, target.image, next.image)};
      }

      loss::LossBreakdown<float> breakdown;
      try {
        breakdown = loss::total_loss(target.image, sources, pyramid, poses, K, weights);
      } catch (const NumericError& e) {
        throw NumericError("train: iteration " + std::to_string(iter) + ": " + e.what());
      }
      // with both oracle hooks active nothing trainable reaches the loss
      if (breakdown.total.on_tape()) tape.backward(breakdown.total);

      for (const auto& [name, g] : depth_params.grads()) {
        auto [it, fresh] = grad_acc.try_emplace(name, g.clone());
        if (!fresh)
          for (std::int64_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
      }
      for (BoundParams* group : {&pose_params, &head_params})
        for (const auto& [name, g] : group->grads()) {
          auto [it, fresh] = grad_acc.try_emplace(name, g.clone());
          if (!fresh)
            for (std::int64_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
        }

      double photo = 0, smooth = 0;
      for (double p : breakdown.photometric_per_scale) photo += p;
      for (double s : breakdown.smoothness_per_scale) smooth += s;
      row.total += breakdown.total.item();
      row.photometric += photo / static_cast<double>(breakdown.photometric_per_scale.size());
      row.smoothness += smooth / static_cast<double>(breakdown.smoothness_per_scale.size());
      row.mask_fraction += breakdown.masked_pixel_fraction;
    }

    const float inv_batch = 1.0f / static_cast<float>(config.batch_size);
    for (auto& [name, g] : grad_acc)
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] *= inv_batch;
    row.total /= config.batch_size;
    row.photometric /= config.batch_size;
    row.smoothness /= config.batch_size;
    row.mask_fraction /= config.batch_size;
    if (!std::isfinite(row.total))
      throw NumericError("train: non-finite loss at iteration " + std::to_string(iter));

    depth_opt.step(ckpt.depth, grad_acc, lr_scale);
    if (ckpt.heads.size()) heads_opt.step(ckpt.heads, grad_acc, lr_scale);
    pose_opt.step(ckpt.pose, grad_acc, lr_scale);

    if (iter % 50 == 0 || iter + 1 == config.iterations) {
      if (!ckpt.depth.all_finite() || !ckpt.pose.all_finite() || !ckpt.heads.all_finite())
        throw NumericError("train: non-finite parameters at iteration " + std::to_string(iter));
    }
    ckpt.history.push_back(row);
  }
  ckpt.iterations_run = config.iterations;

  if (ckpt.semantic.size() && ckpt.semantic.content_hash() != ckpt.semantic_hash)
    throw TensorError("train: frozen semantic parameters changed during training");
  return ckpt;
}

namespace {

/// Per-pixel cross entropy of logits [1,C,H,W] against labels, mean over
/// pixels. Max subtraction is detached; the gradient identity still holds.
Tensor32 cross_entropy(const Tensor32& logits, const std::vector<std::uint8_t>& labels) {
  const int C = logits.extent(1), H = logits.extent(2), W = logits.extent(3);
  Tensor32 max_c = max_axis(logits.detached(), 1);                  // [1,H,W]
  std::vector<Tensor32> rep(static_cast<std::size_t>(C), reshape(max_c, {1, 1, H, W}));
  Tensor32 shifted = sub(logits, concat(rep, 1));
  Tensor32 log_denominator = log(sum_axis(exp(shifted), 1));        // [1,H,W]
  Tensor32 one_hot = Tensor32::zeros({1, C, H, W});
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      one_hot[(static_cast<std::int64_t>(labels[static_cast<std::size_t>(y) * W + x]) * H + y) * W + x] = 1.0f;
  Tensor32 picked = sum_axis(mul(shifted, one_hot), 1);             // [1,H,W]
  return mean(sub(log_denominator, picked));
}

}  // namespace

SemanticPretrainResult pretrain_semantic(const std::vector<sim::Sequence>& data, int epochs,
                                         std::uint64_t seed, const std::vector<sim::Sequence>& holdout) {
  if (data.empty() || data[0].frames.empty()) throw TensorError("pretrain_semantic: empty dataset");
  SemanticPretrainResult out;
  init_semantic_params(out.params, seed);
  Adam opt(1e-3);

  std::vector<const sim::FrameSample*> frames;
  for (const sim::Sequence& s : data)
    for (const sim::FrameSample& f : s.frames) frames.push_back(&f);

  Rng order_rng(seed ^ 0xAC5EEDull);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::vector<const sim::FrameSample*> shuffled = frames;
    order_rng.shuffle(shuffled.begin(), shuffled.end());
    double ce_acc = 0;
    for (const sim::FrameSample* f : shuffled) {
      Tape<float> tape;
      BoundParams params(out.params, &tape);
      Tensor32 loss = cross_entropy(semantic_forward(params, f->image).logits, f->semantic_gt);
      tape.backward(loss);
      opt.step(out.params, params.grads());
      ce_acc += loss.item();
    }
    out.epoch_cross_entropy.push_back(ce_acc / static_cast<double>(frames.size()));
  }

  if (!holdout.empty()) {
    std::int64_t correct = 0, total = 0;
    for (const sim::Sequence& s : holdout)
      for (const sim::FrameSample& f : s.frames) {
        const std::vector<std::uint8_t> pred = predict_semantic(out.params, f.image);
        for (std::size_t i = 0; i < pred.size(); ++i) {
          correct += pred[i] == f.semantic_gt[i] ? 1 : 0;
          ++total;
        }
      }
    out.holdout_accuracy = static_cast<double>(correct) / static_cast<double>(total);
  }
  out.content_hash = out.params.content_hash();
  return out;
}

Tensor32 predict_depth(const Checkpoint& ckpt, const sim::FrameSample& frame) {
  BoundParams depth_params(ckpt.depth, nullptr);
  BoundParams head_params(ckpt.heads, nullptr);
  const int H = frame.image.extent(1), W = frame.image.extent(2);

  std::vector<Tensor32> guidance;
  if (ckpt.config.guidance_source != "none") {
    GuidanceSource source(ckpt.config, ckpt.semantic.size() ? &ckpt.semantic : nullptr,
                          ckpt.config.seed);
    guidance = source.guidance(frame, &head_params);
  } else {
    guidance = constant_guidance(H, W);
  }
  std::vector<Tensor32> pyramid = depth_forward(depth_params, frame.image, guidance, ckpt.config);
  return div(Tensor32::full({1}, 1.0f), pyramid[0]);
}

std::vector<std::uint8_t> predict_semantic(const ParamSet& semantic, const Tensor32& image) {
  BoundParams params(semantic, nullptr);
  Tensor32 logits = semantic_forward(params, image).logits;
  const int C = logits.extent(1), H = logits.extent(2), W = logits.extent(3);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(H) * W, 0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      int best = 0;
      float best_v = logits[(static_cast<std::int64_t>(0) * H + y) * W + x];
      for (int c = 1; c < C; ++c) {
        const float v = logits[(static_cast<std::int64_t>(c) * H + y) * W + x];
        if (v > best_v) {
          best_v = v;
          best = c;
        }
      }
      out[static_cast<std::size_t>(y) * W + x] = static_cast<std::uint8_t>(best);
    }
  return out;
}

}  // namespace semguide::nets
