// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "semguide/core/grad_check.hpp"
#include "semguide/loss/objective.hpp"

using namespace semguide;
using namespace semguide::loss;

namespace {

Tensor32 pose_tensor(const geo::PoseSE3& p) {
  return Tensor32::from_data({6}, {static_cast<float>(p.rotation.x()), static_cast<float>(p.rotation.y()),
                                   static_cast<float>(p.rotation.z()), static_cast<float>(p.translation.x()),
                                   static_cast<float>(p.translation.y()),
                                   static_cast<float>(p.translation.z())});
}

geo::PoseSE3 relative_pose(const sim::FrameSample& target, const sim::FrameSample& source) {
  return geo::se3_compose(source.pose_gt, geo::se3_invert(target.pose_gt));
}

/// Ground-truth inverse-depth pyramid for a frame (sky mapped far away).
std::vector<Tensor32> gt_pyramid(const sim::FrameSample& frame, int scales) {
  const int H = frame.depth_gt.extent(0), W = frame.depth_gt.extent(1);
  Tensor32 inv = Tensor32::zeros({H, W});
  for (std::int64_t i = 0; i < inv.size(); ++i)
    inv[i] = frame.depth_gt[i] > 0 ? 1.0f / frame.depth_gt[i] : 1e-4f;
  std::vector<Tensor32> pyr{inv};
  for (int s = 1; s < scales; ++s) {
    Tensor32 prev = pyr.back();
    Tensor32 down = avg_pool(reshape(prev, {1, 1, prev.extent(0), prev.extent(1)}), 2, 2);
    pyr.push_back(reshape(down, {down.extent(2), down.extent(3)}));
  }
  return pyr;
}

}  // namespace

TEST_CASE("ssim of an image with itself is 1 everywhere") {
  Rng rng(2);
  Tensor32 a = oracle::random_tensor<float>({3, 6, 7}, rng, 0.0, 1.0);
  Tensor32 s = ssim_map(a, a);
  for (std::int64_t i = 0; i < s.size(); ++i) CHECK(s[i] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("mean shift is penalized by the luminance term") {
  Tensor32 a = Tensor32::full({3, 5, 5}, 0.25f);
  Tensor32 b = Tensor32::full({3, 5, 5}, 0.75f);
  Tensor32 s = ssim_map(a, b);
  for (std::int64_t i = 0; i < s.size(); ++i) CHECK(s[i] < 1.0f);
}

TEST_CASE("ssim matches the per-window oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed * 41 + 5);
    Tensor64 a = oracle::random_tensor<double>({3, 6, 8}, rng, 0.0, 1.0);
    Tensor64 b = oracle::random_tensor<double>({3, 6, 8}, rng, 0.0, 1.0);
    Tensor64 got = ssim_map(a, b);
    Tensor64 want = oracle::ssim(a, b);
    REQUIRE(got.shape() == want.shape());
    for (std::int64_t i = 0; i < got.size(); ++i) CHECK(std::fabs(got[i] - want[i]) < 1e-6);
  }
}

TEST_CASE("photometric map: identical images give zero, alpha 0 gives channel-mean L1") {
  Rng rng(7);
  Tensor32 a = oracle::random_tensor<float>({3, 5, 6}, rng, 0.0, 1.0);
  Tensor32 zero = photometric_map(a, a, 0.85);
  for (std::int64_t i = 0; i < zero.size(); ++i) CHECK(zero[i] == doctest::Approx(0.0).epsilon(1e-7));

  Tensor32 b = oracle::random_tensor<float>({3, 5, 6}, rng, 0.0, 1.0);
  Tensor32 l1 = photometric_map(a, b, 0.0);
  const int hw = 30;
  for (std::int64_t i = 0; i < hw; ++i) {
    float want = 0;
    for (int c = 0; c < 3; ++c) want += std::fabs(a[c * hw + i] - b[c * hw + i]);
    CHECK(l1[i] == doctest::Approx(want / 3).epsilon(1e-5));
  }
  CHECK_THROWS_AS(photometric_map(a, b, 1.5), TensorError);
}

TEST_CASE("photometric map at alpha 0.85 equals the oracle combination") {
  Rng rng(9);
  Tensor64 a = oracle::random_tensor<double>({3, 6, 6}, rng, 0.0, 1.0);
  Tensor64 b = oracle::random_tensor<double>({3, 6, 6}, rng, 0.0, 1.0);
  Tensor64 got = photometric_map(a, b, 0.85);
  Tensor64 s = oracle::ssim(a, b);
  const int hw = 36;
  for (std::int64_t i = 0; i < hw; ++i) {
    double l1 = 0;
    for (int c = 0; c < 3; ++c) l1 += std::fabs(a[c * hw + i] - b[c * hw + i]);
    l1 /= 3;
    const double want = 0.85 * (1.0 - s[i]) / 2.0 + 0.15 * l1;
    CHECK(got[i] == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("min_reprojection: single source is identity, min is a pointwise lower bound") {
  Rng rng(12);
  Tensor32 a = oracle::random_tensor<float>({4, 5}, rng, 0.0, 1.0);
  Tensor32 single = min_reprojection<float>({a});
  for (std::int64_t i = 0; i < a.size(); ++i) CHECK(single[i] == a[i]);

  Tensor32 b = oracle::random_tensor<float>({4, 5}, rng, 0.0, 1.0);
  Tensor32 c = oracle::random_tensor<float>({4, 5}, rng, 0.0, 1.0);
  Tensor32 m = min_reprojection<float>({a, b, c});
  for (std::int64_t i = 0; i < a.size(); ++i) {
    CHECK(m[i] <= a[i]);
    CHECK(m[i] <= b[i]);
    CHECK(m[i] <= c[i]);
    CHECK(m[i] == std::min({a[i], b[i], c[i]}));
  }
  CHECK_THROWS_AS(min_reprojection<float>({}), ShapeError);
}

TEST_CASE("min_reprojection prefers the un-occluded source and masks dead pixels") {
  // constructed occlusion: source A has a high-loss patch, source B is clean there
  Tensor32 a = Tensor32::full({4, 4}, 0.1f);
  Tensor32 b = Tensor32::full({4, 4}, 0.3f);
  a[5] = 0.9f;  // occluded in A
  Tensor32 m = min_reprojection<float>({a, b});
  CHECK(m[5] == 0.3f);
  CHECK(m[0] == 0.1f);

  Tensor32 va = Tensor32::full({4, 4}, 1.0f);
  Tensor32 vb = Tensor32::full({4, 4}, 1.0f);
  va[7] = 0.0f;
  vb[7] = 0.0f;  // invalid in every source
  Tensor32 masked = min_reprojection<float>({a, b}, {va, vb});
  CHECK(masked[7] >= static_cast<float>(kMaskedLoss) * 0.99f);
  CHECK(masked[5] == 0.3f);
}

TEST_CASE("auto-mask is all false for a static camera") {
  Rng rng(14);
  Tensor32 img = oracle::random_tensor<float>({3, 5, 6}, rng, 0.0, 1.0);
  Tensor32 warped = photometric_map(img, img, 0.85);
  Tensor32 unwarped = photometric_map(img, img, 0.85);
  Tensor32 mask = auto_mask<float>({warped}, {unwarped});
  for (std::int64_t i = 0; i < mask.size(); ++i) CHECK(mask[i] == 0.0f);
}

TEST_CASE("auto-mask is mostly true for real motion over a textured scene") {
  sim::SceneSpec spec = fixtures::groundward_scene(96, 64, 4);
  spec.trajectory.velocity = {0.0, 0.0, 0.3};  // large baseline: flow well beyond texture noise
  sim::Sequence seq = sim::make_dataset(spec);
  const sim::FrameSample& t = seq.frames[1];
  Tensor32 depth = t.depth_gt.clone();
  for (std::int64_t i = 0; i < depth.size(); ++i)
    if (depth[i] <= 0) depth[i] = 1e4f;
  std::vector<Tensor32> warped, unwarped, valid;
  for (int si : {0, 2}) {
    const sim::FrameSample& s = seq.frames[static_cast<std::size_t>(si)];
    geo::SynthesizedView<float> view =
        geo::synthesize_view(s.image, depth, pose_tensor(relative_pose(t, s)), seq.intrinsics);
    warped.push_back(photometric_map(t.image, view.image, 0.85));
    unwarped.push_back(photometric_map(t.image, s.image, 0.85));
    valid.push_back(view.mask);
  }
  Tensor32 mask = auto_mask<float>(warped, unwarped, valid);
  double frac = 0;
  for (std::int64_t i = 0; i < mask.size(); ++i) frac += mask[i];
  frac /= static_cast<double>(mask.size());
  INFO("auto-mask true fraction ", frac);
  CHECK(frac > 0.9);
}

TEST_CASE("auto-mask is false over a same-speed follower") {
  sim::SceneSpec spec = fixtures::follower_scene(96, 64, 4, /*yaw=*/0.0);
  // keep the follower the only car so its pixels are identifiable by class
  std::erase_if(spec.boxes, [](const sim::Box& b) {
    return b.cls == static_cast<int>(sim::SemClass::car) && b.velocity.norm() == 0.0;
  });
  sim::Sequence seq = sim::make_dataset(spec);
  const sim::FrameSample& t = seq.frames[1];
  const sim::FrameSample& s = seq.frames[2];
  Tensor32 depth = t.depth_gt.clone();
  for (std::int64_t i = 0; i < depth.size(); ++i)
    if (depth[i] <= 0) depth[i] = 1e4f;
  geo::SynthesizedView<float> view =
      geo::synthesize_view(s.image, depth, pose_tensor(relative_pose(t, s)), seq.intrinsics);
  Tensor32 warped = photometric_map(t.image, view.image, 0.85);
  Tensor32 unwarped = photometric_map(t.image, s.image, 0.85);
  Tensor32 mask = auto_mask<float>({warped}, {unwarped}, {view.mask});
  // interior follower pixels: the whole 3x3 SSIM support must be on the object
  const int W = seq.intrinsics.width, H = seq.intrinsics.height;
  auto is_car = [&](int y, int x) {
    return t.semantic_gt[static_cast<std::size_t>(y) * W + x] ==
           static_cast<std::uint8_t>(sim::SemClass::car);
  };
  int follower_true = 0, follower_px = 0;
  for (int y = 1; y + 1 < H; ++y)
    for (int x = 1; x + 1 < W; ++x) {
      bool interior = true;
      for (int dy = -1; dy <= 1 && interior; ++dy)
        for (int dx = -1; dx <= 1 && interior; ++dx) interior = is_car(y + dy, x + dx);
      if (!interior) continue;
      ++follower_px;
      follower_true += mask[static_cast<std::int64_t>(y) * W + x] > 0 ? 1 : 0;
    }
  REQUIRE(follower_px > 100);
  INFO("follower pixels ", follower_px, " masked-in ", follower_true);
  CHECK(follower_true < follower_px / 10);
}

TEST_CASE("smoothness: constant inverse depth gives zero, zero-mean raises") {
  Tensor32 inv = Tensor32::full({6, 8}, 0.2f);
  Rng rng(3);
  Tensor32 img = oracle::random_tensor<float>({3, 6, 8}, rng, 0.0, 1.0);
  CHECK(smoothness(inv, img).item() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_THROWS_AS(smoothness(Tensor32::zeros({6, 8}), img), TensorError);
}

TEST_CASE("smoothness of a linear ramp on a constant image is the mean slope") {
  const int H = 6, W = 9;
  Tensor32 inv = Tensor32::zeros({H, W});
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) inv[static_cast<std::int64_t>(y) * W + x] = 1.0f + 0.1f * x;
  Tensor32 img = Tensor32::full({3, H, W}, 0.5f);
  // after mean normalization the x-step is 0.1/mean; y-gradients vanish
  double m = 0;
  for (std::int64_t i = 0; i < inv.size(); ++i) m += inv[i];
  m /= static_cast<double>(inv.size());
  const double want = 0.1 / m;  // e^{-0} weights, every x-difference equals the slope
  CHECK(smoothness(inv, img).item() == doctest::Approx(want).epsilon(1e-5));
}

TEST_CASE("depth edge aligned with an image edge costs less than a misaligned one") {
  const int H = 8, W = 8;
  Tensor32 inv = Tensor32::zeros({H, W});
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) inv[static_cast<std::int64_t>(y) * W + x] = x < 4 ? 1.0f : 2.0f;
  Tensor32 aligned = Tensor32::zeros({3, H, W});
  Tensor32 misaligned = Tensor32::zeros({3, H, W});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        aligned[(static_cast<std::int64_t>(c) * H + y) * W + x] = x < 4 ? 0.2f : 0.9f;
        misaligned[(static_cast<std::int64_t>(c) * H + y) * W + x] = y < 4 ? 0.2f : 0.9f;
      }
  CHECK(smoothness(inv, aligned).item() < smoothness(inv, misaligned).item());
}

TEST_CASE("total loss with ground truth depth and poses is near its floor") {
  sim::Sequence seq = sim::make_dataset(fixtures::static_scene(160, 96, 4));
  const sim::FrameSample& t = seq.frames[1];
  LossWeights weights;
  std::vector<Tensor32> sources{seq.frames[0].image, seq.frames[2].image};
  std::vector<Tensor32> poses{pose_tensor(relative_pose(t, seq.frames[0])),
                              pose_tensor(relative_pose(t, seq.frames[2]))};
  LossBreakdown<float> out =
      total_loss(t.image, sources, gt_pyramid(t, 4), poses, seq.intrinsics, weights);
  for (double p : out.photometric_per_scale) {
    INFO("photometric per scale ", p);
    CHECK(p < 0.01);
  }
  CHECK(out.total.item() > 0.0f);

  // breakdown recombination
  double recomputed = 0;
  for (std::size_t s = 0; s < out.photometric_per_scale.size(); ++s)
    recomputed += out.photometric_per_scale[s] +
                  weights.lambda1 * std::pow(2.0, -static_cast<double>(s)) * out.smoothness_per_scale[s];
  recomputed /= static_cast<double>(out.photometric_per_scale.size());
  CHECK(out.total.item() == doctest::Approx(recomputed).epsilon(1e-7));
}

TEST_CASE("lambda 0 reduces the total to the pure photometric assembly") {
  sim::Sequence seq = sim::make_dataset(fixtures::static_scene(96, 64, 4));
  const sim::FrameSample& t = seq.frames[1];
  LossWeights weights;
  weights.lambda1 = 0.0;
  std::vector<Tensor32> sources{seq.frames[0].image, seq.frames[2].image};
  std::vector<Tensor32> poses{pose_tensor(relative_pose(t, seq.frames[0])),
                              pose_tensor(relative_pose(t, seq.frames[2]))};
  LossBreakdown<float> out =
      total_loss(t.image, sources, gt_pyramid(t, 2), poses, seq.intrinsics, weights);
  double photo = 0;
  for (double p : out.photometric_per_scale) photo += p;
  photo /= static_cast<double>(out.photometric_per_scale.size());
  CHECK(out.total.item() == doctest::Approx(photo).epsilon(1e-7));
}

TEST_CASE("single-scale pyramid carries decay weight 1") {
  sim::Sequence seq = sim::make_dataset(fixtures::static_scene(96, 64, 4));
  const sim::FrameSample& t = seq.frames[1];
  LossWeights weights;
  weights.lambda1 = 0.05;
  std::vector<Tensor32> sources{seq.frames[0].image};
  std::vector<Tensor32> poses{pose_tensor(relative_pose(t, seq.frames[0]))};
  LossBreakdown<float> out =
      total_loss(t.image, sources, gt_pyramid(t, 1), poses, seq.intrinsics, weights);
  CHECK(out.total.item() ==
        doctest::Approx(out.photometric_per_scale[0] + 0.05 * out.smoothness_per_scale[0]).epsilon(1e-7));
}

TEST_CASE("identical target and sources starve the auto-mask and raise") {
  Rng rng(100);
  Tensor32 img = oracle::random_tensor<float>({3, 16, 16}, rng, 0.0, 1.0);
  Tensor32 inv = Tensor32::full({16, 16}, 0.25f);
  geo::Intrinsics k;
  k.fx = k.fy = 12;
  k.cx = 8;
  k.cy = 8;
  k.width = 16;
  k.height = 16;
  std::vector<Tensor32> sources{img};
  std::vector<Tensor32> poses{Tensor32::zeros({6})};
  LossWeights weights;
  CHECK_THROWS_AS(total_loss(img, sources, {inv}, poses, k, weights), TensorError);
}

TEST_CASE("total loss is differentiable end to end on a tiny instance") {
  Rng rng(60);
  const int H = 8, W = 8;
  geo::Intrinsics k;
  k.fx = k.fy = 6.0;
  k.cx = 4.0;
  k.cy = 4.0;
  k.width = W;
  k.height = H;
  // textured target/source pair with a known-ish geometry
  Tensor64 target = oracle::random_tensor<double>({3, H, W}, rng, 0.2, 0.8);
  Tensor64 source = oracle::random_tensor<double>({3, H, W}, rng, 0.2, 0.8);
  Tensor64 inv0 = Tensor64::zeros({H, W});
  for (std::int64_t i = 0; i < inv0.size(); ++i) inv0[i] = rng.uniform(0.2, 0.5);
  Tensor64 inv1 = Tensor64::zeros({H / 2, W / 2});
  for (std::int64_t i = 0; i < inv1.size(); ++i) inv1[i] = rng.uniform(0.2, 0.5);
  Tensor64 pose = Tensor64::from_data({6}, {0.011, -0.014, 0.009, 0.13, -0.06, 0.08});

  LossWeights weights;
  weights.lambda1 = 0.01;
  auto fn = [&](const std::vector<Tensor64>& in) {
    Tape<double>* tape = in[0].tape();
    Tensor64 tgt = tape->leaf(target.clone(), false);
    Tensor64 src = tape->leaf(source.clone(), false);
    LossBreakdown<double> out = total_loss(tgt, {src}, {in[0], in[1]}, {in[2]}, k, weights);
    return out.total;
  };
  GradCheckReport r = grad_check(fn, {inv0, inv1, pose}, 1e-5, 1e-3);
  INFO("pyramid/pose errors ", r.per_input_max_rel_err[0], " ", r.per_input_max_rel_err[1], " ",
       r.per_input_max_rel_err[2]);
  CHECK(r.pass);
}
