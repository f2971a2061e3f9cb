// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#include "semguide/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace semguide::eval {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) throw TensorError("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct ValidSet {
  std::vector<std::int64_t> indices;
  double scale = 1.0;
};

ValidSet select_valid(const Tensor<float>& pred, const Tensor<float>& gt, const Tensor<float>& mask,
                      const EvalOptions& opts) {
  if (pred.shape() != gt.shape() || pred.shape() != mask.shape())
    throw ShapeError("compute_metrics: pred/gt/mask shapes differ");
  ValidSet vs;
  for (std::int64_t i = 0; i < gt.size(); ++i)
    if (mask[i] != 0 && gt[i] > 0 && gt[i] <= opts.cap) vs.indices.push_back(i);
  if (vs.indices.empty()) throw TensorError("compute_metrics: empty valid set");
  if (opts.median_scale) {
    std::vector<double> gv, pv;
    gv.reserve(vs.indices.size());
    pv.reserve(vs.indices.size());
    for (std::int64_t i : vs.indices) {
      gv.push_back(gt[i]);
      pv.push_back(pred[i]);
    }
    const double mp = median(pv);
    if (mp <= 0) throw TensorError("compute_metrics: nonpositive prediction median");
    vs.scale = median(gv) / mp;
  }
  return vs;
}

DepthMetrics metrics_over(const Tensor<float>& pred, const Tensor<float>& gt,
                          const std::vector<std::int64_t>& indices, double scale,
                          const EvalOptions& opts) {
  DepthMetrics m;
  m.pixel_count = static_cast<std::int64_t>(indices.size());
  if (indices.empty()) return m;
  double abs_rel = 0, sq_rel = 0, sq = 0, sq_log = 0, d1 = 0, d2 = 0, d3 = 0;
  const double t1 = 1.25, t2 = 1.25 * 1.25, t3 = 1.25 * 1.25 * 1.25;
  for (std::int64_t i : indices) {
    const double g = gt[i];
    const double p = std::clamp(static_cast<double>(pred[i]) * scale, opts.clamp_min, opts.cap);
    const double diff = p - g;
    abs_rel += std::fabs(diff) / g;
    sq_rel += diff * diff / g;
    sq += diff * diff;
    const double lg = std::log(p) - std::log(g);
    sq_log += lg * lg;
    const double ratio = std::max(p / g, g / p);
    if (ratio < t1) d1 += 1;
    if (ratio < t2) d2 += 1;
    if (ratio < t3) d3 += 1;
  }
  const double n = static_cast<double>(indices.size());
  m.abs_rel = abs_rel / n;
  m.sq_rel = sq_rel / n;
  m.rmse = std::sqrt(sq / n);
  m.rmse_log = std::sqrt(sq_log / n);
  m.delta1 = d1 / n;
  m.delta2 = d2 / n;
  m.delta3 = d3 / n;
  return m;
}

}  // namespace

DepthMetrics compute_metrics(const Tensor<float>& pred, const Tensor<float>& gt,
                             const Tensor<float>& mask, const EvalOptions& opts) {
  const ValidSet vs = select_valid(pred, gt, mask, opts);
  return metrics_over(pred, gt, vs.indices, vs.scale, opts);
}

ClassBinnedMetrics class_binned(const Tensor<float>& pred, const Tensor<float>& gt,
                                const std::vector<std::uint8_t>& semantic, const Tensor<float>& mask,
                                const EvalOptions& opts) {
  if (static_cast<std::int64_t>(semantic.size()) != gt.size())
    throw ShapeError("class_binned: semantic map size mismatch");
  const ValidSet vs = select_valid(pred, gt, mask, opts);

  ClassBinnedMetrics out;
  out.global = metrics_over(pred, gt, vs.indices, vs.scale, opts);

  std::map<int, std::vector<std::int64_t>> bins;
  for (std::int64_t i : vs.indices) bins[semantic[static_cast<std::size_t>(i)]].push_back(i);
  double acc = 0;
  for (const auto& [cls, idx] : bins) {
    out.per_class[cls] = metrics_over(pred, gt, idx, vs.scale, opts);
    acc += out.per_class[cls].abs_rel;
  }
  out.class_average_abs_rel = acc / static_cast<double>(bins.size());
  return out;
}

DepthMetrics aggregate(const std::vector<DepthMetrics>& frames) {
  DepthMetrics out;
  double sq = 0, sq_log = 0;
  for (const DepthMetrics& f : frames) {
    const double w = static_cast<double>(f.pixel_count);
    out.abs_rel += f.abs_rel * w;
    out.sq_rel += f.sq_rel * w;
    sq += f.rmse * f.rmse * w;
    sq_log += f.rmse_log * f.rmse_log * w;
    out.delta1 += f.delta1 * w;
    out.delta2 += f.delta2 * w;
    out.delta3 += f.delta3 * w;
    out.pixel_count += f.pixel_count;
  }
  if (out.pixel_count == 0) throw TensorError("aggregate: no pixels");
  const double n = static_cast<double>(out.pixel_count);
  out.abs_rel /= n;
  out.sq_rel /= n;
  out.rmse = std::sqrt(sq / n);
  out.rmse_log = std::sqrt(sq_log / n);
  out.delta1 /= n;
  out.delta2 /= n;
  out.delta3 /= n;
  return out;
}

}  // namespace semguide::eval
