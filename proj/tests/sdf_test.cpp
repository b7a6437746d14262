#include <gtest/gtest.h>

#include <algorithm>

#include "lpnet/errors.hpp"
#include "lpnet/gradcheck.hpp"
#include "lpnet/ops.hpp"
#include "lpnet/sdf.hpp"
#include "test_util.hpp"

namespace lpnet {
namespace {

using testing::max_abs_diff;
using testing::random_tensor;

// Offset biases in (-1.5, 1.5) push taps between pixels and past the border.
SDFParams random_sdf(std::int64_t channels, int k, std::mt19937_64& rng) {
  auto p = SDFParams::create(channels, k, rng);
  p.visit("sdf", [&](const std::string& name, Tensor& t) {
    const bool offset_bias = name.find("offset_conv.bias") != std::string::npos;
    t = random_tensor(t.shape(), rng, offset_bias ? -1.5 : -0.3, offset_bias ? 1.5 : 0.3);
  });
  return p;
}

double pixel_sum(const Tensor& w, std::int64_t y, std::int64_t x) {
  double s = 0.0;
  for (std::int64_t j = 0; j < w.c(); ++j) s += w.at(0, j, y, x);
  return s;
}

TEST(KernelField, ZeroParamsSmoothnessIsUniform) {
  std::mt19937_64 rng(1);
  const auto p = SDFParams::create(4, 3, rng);
  const auto kf = gen_kernel_field(random_tensor({1, 1, 5, 5}, rng), random_tensor({1, 4, 5, 5}, rng), p.smooth,
                                   3, FilterKind::kSmoothness);
  for (double v : kf.weights.data()) EXPECT_NEAR(v, 1.0 / 9.0, 1e-16);
  for (double v : kf.offsets.data()) EXPECT_EQ(v, 0.0);
}

TEST(KernelField, ZeroParamsSharpnessIsZero) {
  std::mt19937_64 rng(2);
  const auto p = SDFParams::create(4, 3, rng);
  const auto kf = gen_kernel_field(random_tensor({1, 1, 5, 5}, rng), random_tensor({1, 4, 5, 5}, rng), p.sharp,
                                   3, FilterKind::kSharpness);
  for (double v : kf.weights.data()) EXPECT_EQ(v, 0.0);
}

TEST(KernelField, ConstraintsHoldForRandomDraws) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = trial % 2 == 0 ? 3 : 5;
    const auto p = random_sdf(3, k, rng);
    const auto depth = random_tensor({1, 1, 6, 6}, rng, 0.5, 10.0);
    const auto f = random_tensor({1, 3, 6, 6}, rng, -2.0, 2.0);
    const auto sm = gen_kernel_field(depth, f, p.smooth, k, FilterKind::kSmoothness);
    const auto sh = gen_kernel_field(depth, f, p.sharp, k, FilterKind::kSharpness);
    ASSERT_EQ(sm.weights.shape(), (Shape{1, k * k, 6, 6}));
    ASSERT_EQ(sm.offsets.shape(), (Shape{1, 2 * k * k, 6, 6}));
    const int center = k * k / 2;
    for (std::int64_t y = 0; y < 6; ++y) {
      for (std::int64_t x = 0; x < 6; ++x) {
        EXPECT_NEAR(pixel_sum(sm.weights, y, x), 1.0, 1e-9);
        EXPECT_NEAR(pixel_sum(sh.weights, y, x), 0.0, 1e-9);
        for (int j = 0; j < k * k; ++j) {
          EXPECT_GT(sm.weights.at(0, j, y, x), 0.0);
          // tanh in (-1, 1) minus its mean: within (-2, 2).
          EXPECT_LT(std::abs(sh.weights.at(0, j, y, x)), 2.0);
        }
        for (const auto* kf : {&sm, &sh}) {
          EXPECT_EQ(kf->offsets.at(0, 2 * center, y, x), 0.0);
          EXPECT_EQ(kf->offsets.at(0, 2 * center + 1, y, x), 0.0);
        }
      }
    }
  }
}

TEST(KernelField, MatchesConvOracle) {
  std::mt19937_64 rng(4);
  const auto p = random_sdf(3, 3, rng);
  const auto depth = random_tensor({1, 1, 6, 6}, rng, 0.5, 10.0);
  const auto f = random_tensor({1, 3, 6, 6}, rng);
  for (auto kind : {FilterKind::kSmoothness, FilterKind::kSharpness}) {
    const auto& head = kind == FilterKind::kSmoothness ? p.smooth : p.sharp;
    const auto kf = gen_kernel_field(depth, f, head, 3, kind);
    const auto oracle = testing::kernel_field_oracle(depth, f, head, 3, kind);
    EXPECT_LT(max_abs_diff(kf.weights, oracle.weights), 1e-12);
    EXPECT_LT(max_abs_diff(kf.offsets, oracle.offsets), 1e-12);
  }
}

TEST(KernelField, ShapeMismatchIsRejected) {
  std::mt19937_64 rng(5);
  const auto p = SDFParams::create(2, 3, rng);
  EXPECT_THROW(gen_kernel_field(Tensor::zeros({1, 1, 6, 6}), Tensor::zeros({1, 2, 4, 6}), p.smooth, 3,
                                FilterKind::kSmoothness),
               DimensionError);
}

TEST(Filters, ConstantDepthIsExactlyPreserved) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_sdf(2, 3, rng);
    const auto depth = Tensor::full({1, 1, 6, 6}, 3.3 + trial);
    const auto f = random_tensor({1, 2, 6, 6}, rng);
    const auto sm = gen_kernel_field(depth, f, p.smooth, 3, FilterKind::kSmoothness);
    const auto sh = gen_kernel_field(depth, f, p.sharp, 3, FilterKind::kSharpness);
    for (double v : testing::values(smoothness_filter(depth, sm))) EXPECT_EQ(v, 3.3 + trial);
    for (double v : testing::values(sharpness_filter(depth, sh))) EXPECT_EQ(v, 3.3 + trial);
    // The blend a * d + (1 - a) * d rounds, so the composed module is exact to a few ulps.
    for (double v : testing::values(sdf_forward(depth, f, p).output)) EXPECT_DOUBLE_EQ(v, 3.3 + trial);
  }
}

TEST(Filters, UniformWeightsGiveBoxMean) {
  std::mt19937_64 rng(7);
  const auto depth = random_tensor({1, 1, 5, 5}, rng);
  KernelField kf{Tensor::full({1, 9, 5, 5}, 1.0 / 9.0), Tensor::zeros({1, 18, 5, 5}), 3,
                 FilterKind::kSmoothness};
  const auto out = smoothness_filter(depth, kf);
  for (std::int64_t y = 1; y < 4; ++y) {
    for (std::int64_t x = 1; x < 4; ++x) {
      double s = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) s += depth.at(0, 0, y + dy, x + dx);
      EXPECT_NEAR(out.at(0, 0, y, x), s / 9.0, 1e-14);
    }
  }
}

TEST(Filters, MatchDeformableOracle) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto depth = random_tensor({1, 1, 6, 6}, rng, 0.5, 10.0);
    const auto logits = random_tensor({1, 9, 6, 6}, rng, -2, 2);
    const auto offsets = random_tensor({1, 18, 6, 6}, rng, -2.5, 2.5);
    KernelField sm{ops::softmax_channel(logits), offsets, 3, FilterKind::kSmoothness};
    EXPECT_LT(max_abs_diff(smoothness_filter(depth, sm),
                           testing::deformable_oracle(depth, sm.weights, offsets, 3)),
              1e-10);
    auto w = random_tensor({1, 9, 6, 6}, rng);
    const auto mean = ops::scale(ops::sum_channels(w), 1.0 / 9.0);
    KernelField sh{ops::sub(w, ops::repeat_channels(mean, 9)), offsets, 3, FilterKind::kSharpness};
    EXPECT_LT(max_abs_diff(sharpness_filter(depth, sh),
                           ops::add(depth, testing::deformable_oracle(depth, sh.weights, offsets, 3))),
              1e-10);
  }
}

TEST(Filters, SharpnessZeroWeightsIsIdentity) {
  std::mt19937_64 rng(9);
  const auto depth = random_tensor({1, 1, 6, 6}, rng);
  KernelField kf{Tensor::zeros({1, 9, 6, 6}), random_tensor({1, 18, 6, 6}, rng), 3, FilterKind::kSharpness};
  EXPECT_TRUE(testing::bit_equal(sharpness_filter(depth, kf), depth));
}

TEST(Filters, SharpnessRaisesStepEdge) {
  // Columns 0..2 at depth 1, columns 3..5 at depth 3.
  std::vector<double> v(36);
  for (int i = 0; i < 36; ++i) v[static_cast<std::size_t>(i)] = i % 6 < 3 ? 1.0 : 3.0;
  const Tensor depth({1, 1, 6, 6}, v);
  std::vector<double> w(9 * 36, 0.0);
  for (int i = 0; i < 36; ++i) {
    w[static_cast<std::size_t>(4 * 36 + i)] = 0.5;   // center
    w[static_cast<std::size_t>(3 * 36 + i)] = -0.5;  // left neighbour
  }
  KernelField kf{Tensor({1, 9, 6, 6}, w), Tensor::zeros({1, 18, 6, 6}), 3, FilterKind::kSharpness};
  const auto out = sharpness_filter(depth, kf);
  for (std::int64_t y = 0; y < 6; ++y) {
    const double before = depth.at(0, 0, y, 3) - depth.at(0, 0, y, 2);
    const double after = out.at(0, 0, y, 3) - out.at(0, 0, y, 2);
    EXPECT_DOUBLE_EQ(after - before, 0.5 * 2.0);
    EXPECT_EQ(out.at(0, 0, y, 3), 3.0 + 0.5 * 2.0);
    EXPECT_EQ(out.at(0, 0, y, 2), 1.0);
  }
}

TEST(Filters, SmoothnessStaysInSampledRange) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto depth = random_tensor({1, 1, 6, 6}, rng, 0.5, 10.0);
    const auto [lo, hi] = std::minmax_element(depth.data().begin(), depth.data().end());
    KernelField kf{ops::softmax_channel(random_tensor({1, 9, 6, 6}, rng, -3, 3)),
                   random_tensor({1, 18, 6, 6}, rng, -3, 3), 3, FilterKind::kSmoothness};
    for (double v : testing::values(smoothness_filter(depth, kf))) {
      EXPECT_GE(v, *lo - 1e-12);
      EXPECT_LE(v, *hi + 1e-12);
    }
  }
}

TEST(Filters, WrongKindIsRejected) {
  KernelField kf{Tensor::zeros({1, 9, 4, 4}), Tensor::zeros({1, 18, 4, 4}), 3, FilterKind::kSharpness};
  EXPECT_THROW(smoothness_filter(Tensor::zeros({1, 1, 4, 4}), kf), DimensionError);
}

TEST(Blend, EndpointsAndDegenerateCase) {
  std::mt19937_64 rng(11);
  const auto a = random_tensor({1, 1, 4, 4}, rng), b = random_tensor({1, 1, 4, 4}, rng);
  EXPECT_TRUE(testing::bit_equal(blend_with(a, b, Tensor::full({1, 1, 4, 4}, 1.0)), a));
  EXPECT_TRUE(testing::bit_equal(blend_with(a, b, Tensor::zeros({1, 1, 4, 4})), b));
  const auto sel = random_tensor({1, 1, 4, 4}, rng, 0.0, 1.0);
  EXPECT_LT(max_abs_diff(blend_with(a, a, sel), a), 1e-15);
}

TEST(Blend, OutputBetweenInputs) {
  std::mt19937_64 rng(12);
  auto p = random_sdf(2, 3, rng);
  const auto a = random_tensor({1, 1, 6, 6}, rng), b = random_tensor({1, 1, 6, 6}, rng);
  const auto r = selective_blend(a, b, random_tensor({1, 2, 6, 6}, rng), p.attention);
  for (std::size_t i = 0; i < 36; ++i) {
    EXPECT_GT(r.selection.data()[i], 0.0);
    EXPECT_LT(r.selection.data()[i], 1.0);
    EXPECT_GE(r.output.data()[i], std::min(a.data()[i], b.data()[i]) - 1e-15);
    EXPECT_LE(r.output.data()[i], std::max(a.data()[i], b.data()[i]) + 1e-15);
  }
}

TEST(SDF, ZeroParamsGiveBoxFilterAndEvenSelection) {
  std::mt19937_64 rng(13);
  const auto p = SDFParams::create(3, 3, rng);
  const auto depth = random_tensor({1, 1, 6, 6}, rng, 1.0, 5.0);
  const auto r = sdf_forward(depth, random_tensor({1, 3, 6, 6}, rng), p);
  const auto box = testing::deformable_oracle(depth, Tensor::full({1, 9, 6, 6}, 1.0 / 9.0),
                                              Tensor::zeros({1, 18, 6, 6}), 3);
  EXPECT_LT(max_abs_diff(r.smoothed, box), 1e-14);
  EXPECT_TRUE(testing::bit_equal(r.sharpened, r.smoothed));
  EXPECT_LT(max_abs_diff(r.output, r.smoothed), 1e-15);
  for (double v : r.selection.data()) EXPECT_EQ(v, 0.5);
}

TEST(SDF, MatchesComposedOracle) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = trial < 7 ? 3 : 5;
    const auto p = random_sdf(3, k, rng);
    const auto depth = random_tensor({1, 1, 6, 6}, rng, 0.5, 10.0);
    const auto f = random_tensor({1, 3, 6, 6}, rng);
    EXPECT_LT(max_abs_diff(sdf_forward(depth, f, p).output, testing::sdf_oracle(depth, f, p)), 1e-9);
  }
}

TEST(SDF, GradCheckOnSixBySix) {
  std::mt19937_64 rng(15);
  auto p = random_sdf(2, 3, rng);
  auto depth = random_tensor({1, 1, 6, 6}, rng, 0.5, 10.0);
  auto f = random_tensor({1, 2, 6, 6}, rng);
  std::vector<Tensor> params{depth.set_requires_grad(true), f.set_requires_grad(true)};
  p.visit("sdf", [&](const std::string&, Tensor& t) { params.push_back(t.set_requires_grad(true)); });
  const auto proj = random_tensor({1, 1, 6, 6}, rng);
  GradCheckOptions opt;
  opt.max_checks_per_param = 12;
  const auto report = gradcheck([&] { return ops::sum(ops::mul(sdf_forward(depth, f, p).output, proj)); },
                                params, opt);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
  EXPECT_LT(report.max_rel_error, 1e-4);
}

}  // namespace
}  // namespace lpnet
