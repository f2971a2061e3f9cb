// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "oracles.hpp"
#include "semguide/core/grad_check.hpp"
#include "semguide/pac/pac.hpp"

using namespace semguide;
using namespace semguide::pac;

namespace {

template <typename S>
PacParams<S> random_pac_params(Rng& rng, int out_ch, int in_ch, int k) {
  PacParams<S> p;
  p.weight = oracle::random_tensor<S>({out_ch, in_ch, k, k}, rng);
  p.bias = oracle::random_tensor<S>({out_ch}, rng);
  p.log_sigma = oracle::random_tensor<S>({out_ch}, rng, -0.4, 0.6);
  return p;
}

}  // namespace

TEST_CASE("gaussian kernel: zero distance, analytic point, monotone decay") {
  CHECK(gaussian_kernel<double>({0.3, -0.2}, {0.3, -0.2}, 1.7) == 1.0);

  // |fi - fj| = sigma * sqrt(2)  ->  exp(-1)
  const double sigma = 0.8;
  const double d = sigma * std::sqrt(2.0);
  CHECK(gaussian_kernel<double>({d, 0.0}, {0.0, 0.0}, sigma) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  CHECK(gaussian_kernel<double>({d, 0.0}, {0.0, 0.0}, sigma) == doctest::Approx(0.367879).epsilon(1e-5));

  double prev = 2.0;
  for (double dist = 0.0; dist < 3.0; dist += 0.1) {
    const double v = gaussian_kernel<double>({dist}, {0.0}, 1.0);
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(gaussian_kernel<double>({1.0}, {0.0}, 0.0), TensorError);
  CHECK_THROWS_AS(gaussian_kernel<double>({1.0}, {0.0, 1.0}, 1.0), ShapeError);
}

TEST_CASE("constant guidance reduces PAC to standard convolution") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed * 53 + 1);
    const int C = rng.uniform_int(1, 3), O = rng.uniform_int(1, 3), D = rng.uniform_int(1, 4);
    const int H = rng.uniform_int(4, 7), W = rng.uniform_int(4, 7);
    Tensor32 v = oracle::random_tensor<float>({1, C, H, W}, rng);
    Tensor32 f = Tensor32::full({1, D, H, W}, static_cast<float>(rng.uniform(-2, 2)));
    PacParams<float> p = random_pac_params<float>(rng, O, C, 3);
    Tensor32 got = pac_forward(v, f, p);
    Tensor32 want = conv2d(v, p.weight, p.bias, 1, 1);
    REQUIRE(got.shape() == want.shape());
    for (std::int64_t i = 0; i < got.size(); ++i) CHECK(std::fabs(got[i] - want[i]) < 1e-6);
  }
}

TEST_CASE("k=1 PAC ignores guidance entirely") {
  Rng rng(5);
  Tensor32 v = oracle::random_tensor<float>({1, 2, 5, 5}, rng);
  Tensor32 f = oracle::random_tensor<float>({1, 3, 5, 5}, rng);
  PacParams<float> p = random_pac_params<float>(rng, 2, 2, 1);
  Tensor32 got = pac_forward(v, f, p);
  Tensor32 want = conv2d(v, p.weight, p.bias, 1, 0);
  for (std::int64_t i = 0; i < got.size(); ++i) CHECK(std::fabs(got[i] - want[i]) < 1e-6);
}

TEST_CASE("PAC matches the literal nested-loop oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed * 97 + 3);
    const int C = 2, O = 3, D = 3, H = 6, W = 6;
    Tensor32 v = oracle::random_tensor<float>({1, C, H, W}, rng);
    Tensor32 f = oracle::random_tensor<float>({1, D, H, W}, rng);
    PacParams<float> p = random_pac_params<float>(rng, O, C, 3);
    Tensor32 got = pac_forward(v, f, p);
    Tensor32 want = oracle::pac(v, f, p.weight, p.bias, p.log_sigma);
    REQUIRE(got.shape() == want.shape());
    for (std::int64_t i = 0; i < got.size(); ++i) CHECK(std::fabs(got[i] - want[i]) < 1e-6);
  }
}

TEST_CASE("large bandwidth limit converges to standard convolution") {
  Rng rng(17);
  Tensor32 v = oracle::random_tensor<float>({1, 2, 6, 6}, rng);
  Tensor32 f = oracle::random_tensor<float>({1, 3, 6, 6}, rng, -1, 1);
  PacParams<float> p = random_pac_params<float>(rng, 2, 2, 3);
  // max pairwise feature distance is bounded by 2*sqrt(D); push sigma ~1e3 beyond it
  p.log_sigma = Tensor32::full({2}, std::log(1000.0f * 2.0f * std::sqrt(3.0f)));
  Tensor32 got = pac_forward(v, f, p);
  Tensor32 want = conv2d(v, p.weight, p.bias, 1, 1);
  for (std::int64_t i = 0; i < got.size(); ++i) CHECK(std::fabs(got[i] - want[i]) < 1e-4);
}

TEST_CASE("PAC output is invariant to a common additive guidance shift") {
  Rng rng(23);
  Tensor32 v = oracle::random_tensor<float>({1, 2, 5, 6}, rng);
  Tensor32 f = oracle::random_tensor<float>({1, 3, 5, 6}, rng);
  PacParams<float> p = random_pac_params<float>(rng, 2, 2, 3);
  Tensor32 shifted = f.clone();
  for (std::int64_t i = 0; i < shifted.size(); ++i) shifted[i] += 0.75f;
  Tensor32 a = pac_forward(v, f, p);
  Tensor32 b = pac_forward(v, shifted, p);
  for (std::int64_t i = 0; i < a.size(); ++i) CHECK(std::fabs(a[i] - b[i]) < 1e-5);
}

TEST_CASE("pac_forward rejects even kernels and mismatched guidance") {
  Rng rng(1);
  Tensor32 v = oracle::random_tensor<float>({1, 2, 5, 5}, rng);
  Tensor32 f = oracle::random_tensor<float>({1, 2, 5, 5}, rng);
  PacParams<float> p = random_pac_params<float>(rng, 2, 2, 3);
  PacParams<float> even = p;
  even.weight = oracle::random_tensor<float>({2, 2, 2, 2}, rng);
  CHECK_THROWS_AS(pac_forward(v, f, even), ShapeError);
  Tensor32 f_small = oracle::random_tensor<float>({1, 2, 4, 5}, rng);
  CHECK_THROWS_AS(pac_forward(v, f_small, p), ShapeError);
}

TEST_CASE("grad_check passes for every PAC parameter group") {
  Rng rng(29);
  Tensor64 v = oracle::random_tensor<double>({1, 2, 5, 5}, rng);
  Tensor64 f = oracle::random_tensor<double>({1, 2, 5, 5}, rng);
  Tensor64 w = oracle::random_tensor<double>({2, 2, 3, 3}, rng);
  Tensor64 b = oracle::random_tensor<double>({2}, rng);
  Tensor64 ls = oracle::random_tensor<double>({2}, rng, -0.3, 0.5);
  auto fn = [](const std::vector<Tensor64>& in) {
    PacParams<double> p{in[2], in[3], in[4]};
    Tensor64 out = pac_forward(in[0], in[1], p);
    Rng prng(0xFACEu);
    Tensor64 proj = oracle::random_tensor<double>(out.shape(), prng, 0.25, 1.0);
    return mean(mul(out, proj));
  };
  GradCheckReport r = grad_check(fn, {v, f, w, b, ls});
  INFO("per-group errors: v=", r.per_input_max_rel_err[0], " f=", r.per_input_max_rel_err[1],
       " w=", r.per_input_max_rel_err[2], " b=", r.per_input_max_rel_err[3],
       " logsigma=", r.per_input_max_rel_err[4]);
  CHECK(r.pass);
}

TEST_CASE("guidance head shape contract, degenerate input, determinism") {
  Rng rng(31);
  const int Cs = 4, M = 6, D = 8, H = 6, W = 7;
  GuidanceHeadParams<float> p;
  p.conv3_w = oracle::random_tensor<float>({M, Cs, 3, 3}, rng);
  p.conv3_b = oracle::random_tensor<float>({M}, rng);
  p.conv1_w = oracle::random_tensor<float>({D, M, 1, 1}, rng);
  p.conv1_b = oracle::random_tensor<float>({D}, rng);
  p.gn_gamma = Tensor32::full({D}, 1.0f);
  p.gn_beta = Tensor32::zeros({D});
  p.groups = 2;

  Tensor32 x = oracle::random_tensor<float>({1, Cs, H, W}, rng);
  Tensor32 g1 = guidance_head(x, p);
  REQUIRE(g1.shape() == Shape{1, D, H, W});

  // zero input with zero biases: GroupNorm of a constant map, then ELU; finite
  GuidanceHeadParams<float> zb = p;
  zb.conv3_b = Tensor32::zeros({M});
  zb.conv1_b = Tensor32::zeros({D});
  Tensor32 gz = guidance_head(Tensor32::zeros({1, Cs, H, W}), zb);
  CHECK(gz.all_finite());

  Tensor32 g2 = guidance_head(x, p);
  CHECK(std::memcmp(g1.data(), g2.data(), sizeof(float) * static_cast<std::size_t>(g1.size())) == 0);

  GuidanceHeadParams<float> bad = p;
  bad.groups = 3;  // does not divide D = 8
  CHECK_THROWS_AS(guidance_head(x, bad), ShapeError);
}
