// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "semguide/debias/debias.hpp"
#include "semguide/debias/two_stage.hpp"

using namespace semguide;
using namespace semguide::debias;

namespace {

std::vector<Eigen::Vector3d> plane_points(Rng& rng, int n, const Eigen::Vector3d& normal, double offset,
                                          double noise) {
  // span the plane with two orthogonal tangents
  Eigen::Vector3d t1 = normal.unitOrthogonal();
  Eigen::Vector3d t2 = normal.cross(t1);
  Eigen::Vector3d origin = -offset * normal;
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < n; ++i)
    pts.push_back(origin + rng.uniform(-5, 5) * t1 + rng.uniform(-5, 5) * t2 +
                  rng.uniform(-noise, noise) * normal);
  return pts;
}

}  // namespace

TEST_CASE("noiseless ground plane is recovered exactly") {
  Rng rng(4);
  // camera 1.5 above the ground, ground normal points up (-y)
  const Eigen::Vector3d normal(0, -1, 0);
  std::vector<Eigen::Vector3d> pts = plane_points(rng, 200, normal, -1.5, 0.0);
  RansacOptions opts;
  opts.inlier_tol = 0.01;
  PlaneModel plane = ransac_plane(pts, opts);
  CHECK((plane.normal - normal).norm() < 1e-6);
  CHECK(plane.offset == doctest::Approx(-1.5).epsilon(1e-9));
  CHECK(plane.inlier_count == 200);
  CHECK(plane.camera_height() == doctest::Approx(1.5));
}

TEST_CASE("30% outliers leave the normal within 1 degree") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(seed * 7 + 1);
    const Eigen::Vector3d normal = Eigen::Vector3d(0.08 * rng.uniform(-1, 1), -1, 0.08 * rng.uniform(-1, 1)).normalized();
    std::vector<Eigen::Vector3d> pts = plane_points(rng, 140, normal, -1.5, 0.01);
    for (int i = 0; i < 60; ++i)
      pts.push_back(Eigen::Vector3d(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)));
    RansacOptions opts;
    opts.inlier_tol = 0.03;
    opts.seed = seed;
    PlaneModel plane = ransac_plane(pts, opts);
    const double angle = std::acos(std::clamp(std::fabs(plane.normal.dot(normal)), -1.0, 1.0)) * 180.0 / M_PI;
    INFO("seed ", seed, " angle ", angle);
    CHECK(angle < 1.0);
  }
}

TEST_CASE("refined plane keeps inlier RMS within the tolerance") {
  Rng rng(9);
  const Eigen::Vector3d normal = Eigen::Vector3d(0.1, -1, 0.05).normalized();
  std::vector<Eigen::Vector3d> pts = plane_points(rng, 150, normal, -2.0, 0.02);
  RansacOptions opts;
  opts.inlier_tol = 0.05;
  PlaneModel plane = ransac_plane(pts, opts);
  double rms = 0;
  int n = 0;
  for (const auto& p : pts) {
    const double d = plane.signed_distance(p);
    if (std::fabs(d) <= opts.inlier_tol) {
      rms += d * d;
      ++n;
    }
  }
  rms = std::sqrt(rms / n);
  CHECK(rms <= opts.inlier_tol);
}

TEST_CASE("degenerate inputs raise") {
  CHECK_THROWS_AS(ransac_plane({Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 0, 0)}, {}), TensorError);
  // strictly collinear points never produce a valid hypothesis
  std::vector<Eigen::Vector3d> line;
  for (int i = 0; i < 10; ++i) line.push_back(Eigen::Vector3d(i, 2.0 * i, -i));
  CHECK_THROWS_AS(ransac_plane(line, {}), TensorError);
}

TEST_CASE("count_below: empty set, strict margin boundary, constructed fixture") {
  PlaneModel plane;
  plane.normal = Eigen::Vector3d(0, -1, 0);
  plane.offset = 1.5;  // ground at y = +1.5, i.e. 1.5 below the camera

  geo::PointCloud cloud;
  cloud.height = 1;
  cloud.width = 4;
  // y > 1.5 is below ground (y points down)
  cloud.points = {Eigen::Vector3d(0, 1.0, 5), Eigen::Vector3d(0, 1.5, 5), Eigen::Vector3d(0, 1.75, 5),
                  Eigen::Vector3d(0, 2.1, 5)};
  cloud.valid = {1, 1, 1, 1};
  CHECK(count_below(cloud, plane, 0.25) == 1);  // only y=2.1 clears the 0.25 margin strictly
  cloud.points[2].y() = 1.75;                   // exactly margin below: not counted
  CHECK(count_below(cloud, plane, 0.25) == 1);
  cloud.valid = {1, 1, 1, 0};
  CHECK(count_below(cloud, plane, 0.25) == 0);

  geo::PointCloud seventeen;
  seventeen.height = 1;
  seventeen.width = 20;
  for (int i = 0; i < 20; ++i) {
    seventeen.points.push_back(Eigen::Vector3d(0, i < 17 ? 2.0 : 0.0, 3));  // 17 at 2x margin below
    seventeen.valid.push_back(1);
  }
  CHECK(count_below(seventeen, plane, 0.25) == 17);
}

TEST_CASE("filter_dataset drops corrupted frames and keeps clean ones") {
  std::vector<sim::Sequence> data{sim::make_dataset(fixtures::static_scene(96, 64, 8))};
  // synthetic predictor: ground truth depth, but frames 2 and 5 push a block
  // of pixels far beyond their true depth (the infinite-depth signature)
  auto predictor = [&](const sim::FrameSample& frame) {
    Tensor32 depth = frame.depth_gt.clone();
    int index = 0;
    for (; index < static_cast<int>(data[0].frames.size()); ++index)
      if (&data[0].frames[static_cast<std::size_t>(index)] == &frame) break;
    // a real network's output lives strictly inside (d_min, d_max)
    for (std::int64_t i = 0; i < depth.size(); ++i)
      depth[i] = depth[i] <= 0 ? 29.0f : std::min(depth[i], 29.0f);
    if (index == 2 || index == 5) {
      const int W = depth.extent(1), H = depth.extent(0);
      for (int y = H / 2; y < H / 2 + 8; ++y)
        for (int x = W / 2; x < W / 2 + 10; ++x) depth[static_cast<std::int64_t>(y) * W + x] = 28.0f;
    }
    return depth;
  };
  FilterOptions opts;
  FilterReport report = filter_dataset(predictor, data, 30.0, opts);
  REQUIRE(report.total_frames == 8);
  CHECK(report.dropped_indices == std::vector<int>{2, 5});
  CHECK(report.per_frame_below_counts[2] > opts.threshold);
  CHECK(report.per_frame_below_counts[0] <= opts.threshold);
  CHECK(report.kept_fraction == doctest::Approx(6.0 / 8.0));
  CHECK(report.flagged_indices.empty());

  // idempotence: filtering again flags nothing new on the kept frames
  FilterReport again = filter_dataset(predictor, data, 30.0, opts);
  CHECK(again.dropped_indices == report.dropped_indices);

  // accounting + JSON round trip
  FilterReport back = FilterReport::from_json(report.to_json());
  CHECK(back.dropped_indices == report.dropped_indices);
  CHECK(back.per_frame_below_counts == report.per_frame_below_counts);
  CHECK(back.threshold == report.threshold);
}

TEST_CASE("plane-fit failure flags the frame but keeps it") {
  std::vector<sim::Sequence> data{sim::make_dataset(fixtures::static_scene(96, 64, 4))};
  auto predictor = [&](const sim::FrameSample& frame) {
    // frame 1: all depth behind the near-plane cutoff -> no candidates
    int index = 0;
    for (; index < static_cast<int>(data[0].frames.size()); ++index)
      if (&data[0].frames[static_cast<std::size_t>(index)] == &frame) break;
    if (index == 1) return Tensor32::full(frame.depth_gt.shape(), 29.0f);
    Tensor32 depth = frame.depth_gt.clone();
    for (std::int64_t i = 0; i < depth.size(); ++i)
      depth[i] = depth[i] <= 0 ? 25.0f : std::min(depth[i], 25.0f);
    return depth;
  };
  FilterOptions opts;
  FilterReport report = filter_dataset(predictor, data, 30.0, opts);
  CHECK(report.flagged_indices == std::vector<int>{1});
  CHECK_FALSE(report.dropped(1));
}

TEST_CASE("two-stage training on a clean dataset is a no-op filter") {
  std::vector<sim::Sequence> data{sim::make_dataset(fixtures::static_scene(96, 64, 6))};
  nets::TrainConfig cfg;
  cfg.iterations = 10;
  cfg.batch_size = 1;
  cfg.d_max = 25.0;
  TwoStageResult result = two_stage_train(data, cfg);
  CHECK(result.report.dropped_indices.empty());
  CHECK(result.report.kept_fraction == 1.0);
  CHECK(result.stage2.iterations_run == cfg.iterations);
  // fresh seed: stage-2 parameters differ from stage 1
  bool all_equal = true;
  for (std::size_t i = 0; i < result.stage1.depth.size() && all_equal; ++i)
    for (std::int64_t j = 0; j < result.stage1.depth.value(i).size() && all_equal; ++j)
      all_equal = result.stage1.depth.value(i)[j] == result.stage2.depth.value(i)[j];
  CHECK_FALSE(all_equal);

  // determinism: rerun reproduces the identical report
  TwoStageResult rerun = two_stage_train(data, cfg);
  CHECK(rerun.report.per_frame_below_counts == result.report.per_frame_below_counts);
  CHECK(std::fabs(rerun.stage2.history.back().total - result.stage2.history.back().total) < 1e-6);
}
