// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "semguide/eval/metrics.hpp"

using namespace semguide;
using namespace semguide::eval;

namespace {

Tensor32 ones(Shape s) { return Tensor32::full(std::move(s), 1.0f); }

}  // namespace

TEST_CASE("perfect prediction scores (0,0,0,0,1,1,1)") {
  Rng rng(3);
  Tensor32 gt = oracle::random_tensor<float>({8, 8}, rng, 1.0, 40.0);
  EvalOptions opts;
  opts.median_scale = false;
  DepthMetrics m = compute_metrics(gt, gt, ones({8, 8}), opts);
  CHECK(m.abs_rel == 0.0);
  CHECK(m.sq_rel == 0.0);
  CHECK(m.rmse == 0.0);
  CHECK(m.rmse_log == 0.0);
  CHECK(m.delta1 == 1.0);
  CHECK(m.delta2 == 1.0);
  CHECK(m.delta3 == 1.0);
}

TEST_CASE("pred = 2*gt without median scaling: analytic values, all deltas zero") {
  Rng rng(5);
  Tensor32 gt = oracle::random_tensor<float>({6, 6}, rng, 2.0, 20.0);
  Tensor32 pred = gt.clone();
  for (std::int64_t i = 0; i < pred.size(); ++i) pred[i] *= 2.0f;
  EvalOptions opts;
  opts.median_scale = false;
  DepthMetrics m = compute_metrics(pred, gt, ones({6, 6}), opts);
  CHECK(m.abs_rel == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(m.rmse_log == doctest::Approx(std::log(2.0)).epsilon(1e-5));
  // ratio 2 > 1.25^3 = 1.953: no delta bucket admits it
  CHECK(m.delta1 == 0.0);
  CHECK(m.delta2 == 0.0);
  CHECK(m.delta3 == 0.0);

  EvalOptions scaled;
  scaled.median_scale = true;
  DepthMetrics ms = compute_metrics(pred, gt, ones({6, 6}), scaled);
  CHECK(ms.abs_rel == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(ms.delta1 == 1.0);
}

TEST_CASE("delta thresholds are strict: ratio exactly 1.25 skips delta1") {
  Tensor32 gt = Tensor32::full({1, 4}, 4.0f);
  Tensor32 pred = Tensor32::from_data({1, 4}, {5.0f, 4.0f, 4.0f, 4.0f});  // one pixel at ratio 1.25
  EvalOptions opts;
  opts.median_scale = false;
  DepthMetrics m = compute_metrics(pred, gt, ones({1, 4}), opts);
  CHECK(m.delta1 == doctest::Approx(0.75));
  CHECK(m.delta2 == doctest::Approx(1.0));
  CHECK(m.delta3 == doctest::Approx(1.0));
}

TEST_CASE("median scaling leaves all deltas invariant under global rescale") {
  Rng rng(7);
  Tensor32 gt = oracle::random_tensor<float>({10, 10}, rng, 1.0, 30.0);
  Tensor32 pred = oracle::random_tensor<float>({10, 10}, rng, 1.0, 30.0);
  EvalOptions opts;
  DepthMetrics base = compute_metrics(pred, gt, ones({10, 10}), opts);
  for (float scale : {0.25f, 3.0f, 17.0f}) {
    Tensor32 scaled = pred.clone();
    for (std::int64_t i = 0; i < scaled.size(); ++i) scaled[i] *= scale;
    DepthMetrics m = compute_metrics(scaled, gt, ones({10, 10}), opts);
    CHECK(m.delta1 == doctest::Approx(base.delta1));
    CHECK(m.delta2 == doctest::Approx(base.delta2));
    CHECK(m.delta3 == doctest::Approx(base.delta3));
    CHECK(m.abs_rel == doctest::Approx(base.abs_rel).epsilon(1e-5));
  }
}

TEST_CASE("vectorized metrics equal the scalar-loop oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed * 11 + 2);
    Tensor32 gt = oracle::random_tensor<float>({16, 16}, rng, 0.5, 70.0);
    Tensor32 pred = oracle::random_tensor<float>({16, 16}, rng, 0.5, 70.0);
    EvalOptions opts;
    opts.median_scale = false;
    DepthMetrics m = compute_metrics(pred, gt, ones({16, 16}), opts);
    std::vector<double> pv, gv;
    for (std::int64_t i = 0; i < gt.size(); ++i) {
      pv.push_back(std::clamp(static_cast<double>(pred[i]), opts.clamp_min, opts.cap));
      gv.push_back(gt[i]);
    }
    oracle::MetricsOracle o = oracle::metrics(pv, gv);
    CHECK(std::fabs(m.abs_rel - o.abs_rel) < 1e-9);
    CHECK(std::fabs(m.sq_rel - o.sq_rel) < 1e-9);
    CHECK(std::fabs(m.rmse - o.rmse) < 1e-9);
    CHECK(std::fabs(m.rmse_log - o.rmse_log) < 1e-9);
    CHECK(m.delta1 == o.delta1);
    CHECK(m.delta2 == o.delta2);
    CHECK(m.delta3 == o.delta3);
  }
}

TEST_CASE("cap excludes far ground truth; empty valid set raises") {
  Tensor32 gt = Tensor32::from_data({1, 3}, {10.0f, 90.0f, 20.0f});
  Tensor32 pred = Tensor32::from_data({1, 3}, {10.0f, 90.0f, 40.0f});
  EvalOptions opts;
  opts.median_scale = false;
  DepthMetrics m = compute_metrics(pred, gt, ones({1, 3}), opts);
  CHECK(m.pixel_count == 2);  // the 90 m pixel is beyond the 80 m cap

  Tensor32 none = Tensor32::zeros({1, 3});
  CHECK_THROWS_AS(compute_metrics(pred, gt, none, opts), TensorError);
}

TEST_CASE("class binning: single class equals global, unweighted average, absent class") {
  Rng rng(11);
  Tensor32 gt = oracle::random_tensor<float>({8, 8}, rng, 1.0, 30.0);
  Tensor32 pred = oracle::random_tensor<float>({8, 8}, rng, 1.0, 30.0);
  std::vector<std::uint8_t> one_class(64, 2);
  EvalOptions opts;
  opts.median_scale = false;
  ClassBinnedMetrics single = class_binned(pred, gt, one_class, ones({8, 8}), opts);
  REQUIRE(single.per_class.size() == 1);
  CHECK(single.per_class.at(2).abs_rel == doctest::Approx(single.global.abs_rel));
  CHECK(single.class_average_abs_rel == doctest::Approx(single.global.abs_rel));

  // two classes with abs_rel 0.10 and 0.20 and unequal pixel counts -> 0.15
  Tensor32 gt2 = Tensor32::full({1, 10}, 10.0f);
  Tensor32 pred2 = Tensor32::zeros({1, 10});
  std::vector<std::uint8_t> classes(10, 0);
  for (int i = 0; i < 10; ++i) {
    const bool a = i < 7;
    classes[static_cast<std::size_t>(i)] = a ? 1 : 3;
    pred2[i] = a ? 11.0f : 12.0f;  // abs_rel 0.1 vs 0.2
  }
  ClassBinnedMetrics two = class_binned(pred2, gt2, classes, ones({1, 10}), opts);
  REQUIRE(two.per_class.size() == 2);
  CHECK(two.per_class.at(1).abs_rel == doctest::Approx(0.1));
  CHECK(two.per_class.at(3).abs_rel == doctest::Approx(0.2));
  CHECK(two.class_average_abs_rel == doctest::Approx(0.15));
  CHECK(two.per_class.count(4) == 0);

  // global abs_rel lies between per-class extremes
  CHECK(two.global.abs_rel >= 0.1);
  CHECK(two.global.abs_rel <= 0.2);
}

TEST_CASE("aggregate is the pixel-weighted combination") {
  DepthMetrics a;
  a.abs_rel = 0.1;
  a.rmse = 1.0;
  a.delta1 = 1.0;
  a.pixel_count = 10;
  DepthMetrics b;
  b.abs_rel = 0.3;
  b.rmse = 2.0;
  b.delta1 = 0.5;
  b.pixel_count = 30;
  DepthMetrics agg = aggregate({a, b});
  CHECK(agg.abs_rel == doctest::Approx(0.25));
  CHECK(agg.delta1 == doctest::Approx(0.625));
  CHECK(agg.rmse == doctest::Approx(std::sqrt((1.0 * 10 + 4.0 * 30) / 40)));
  CHECK(agg.pixel_count == 40);
}
