#include <gtest/gtest.h>

#include <algorithm>

#include "lpnet/errors.hpp"
#include "lpnet/gradcheck.hpp"
#include "lpnet/ops.hpp"
#include "lpnet/sparse_depth.hpp"
#include "test_util.hpp"

namespace lpnet {
namespace {

using testing::bit_equal;
using testing::max_abs_diff;
using testing::random_sparse_depth;
using testing::random_tensor;

// With depths up to 10 m, scale 0.03 keeps |logit| <= 3, so every weight is
// far above the pooling epsilon.
Conv2d random_conv(std::mt19937_64& rng, double scale = 0.5) {
  Conv2d c;
  c.weight = random_tensor({1, 2, 3, 3}, rng, -scale, scale);
  c.bias = random_tensor({1}, rng, -scale, scale);
  c.stride = 1;
  c.pad = 1;
  return c;
}

Conv2d zero_conv() {
  Conv2d c;
  c.weight = Tensor::zeros({1, 2, 3, 3});
  c.bias = Tensor::zeros({1});
  c.stride = 1;
  c.pad = 1;
  return c;
}

TEST(SparseDepth, FromDepthBuildsMask) {
  const auto s = SparseDepth::from_depth(Tensor({1, 1, 1, 3}, {0.0, 2.0, 0.5}));
  EXPECT_EQ(s.valid_count(), 2);
  EXPECT_EQ(s.mask.data()[0], 0.0);
  EXPECT_EQ(s.mask.data()[1], 1.0);
}

TEST(SparseDepth, InvariantsAreEnforced) {
  SparseDepth bad{Tensor({1, 1, 1, 2}, {1.0, 2.0}), Tensor({1, 1, 1, 2}, {1.0, 0.0})};
  EXPECT_THROW(bad.validate(), DimensionError);
  SparseDepth half{Tensor({1, 1, 1, 1}, {1.0}), Tensor({1, 1, 1, 1}, {0.5})};
  EXPECT_THROW(half.validate(), DimensionError);
  EXPECT_THROW(SparseDepth::from_depth(Tensor({1, 1, 1, 1}, {-1.0})), DimensionError);
}

TEST(WeightedPool, SingleValidPixelIsReproduced) {
  std::mt19937_64 rng(1);
  for (int level = 1; level <= 4; ++level) {
    const std::int64_t k = std::int64_t{1} << level;
    std::vector<double> d(static_cast<std::size_t>(k * k), 0.0);
    d[static_cast<std::size_t>(rng() % d.size())] = 5.0;
    const auto s = SparseDepth::from_depth(Tensor({1, 1, k, k}, d));
    const auto out = weighted_pool(s, level, random_conv(rng, 0.03));
    EXPECT_NEAR(out.depth.item(), 5.0, 1e-6);
    EXPECT_EQ(out.mask.item(), 1.0);
  }
}

TEST(WeightedPool, UniformWeightsAverageValidDepths) {
  const auto s = SparseDepth::from_depth(Tensor({1, 1, 2, 2}, {2.0, 0.0, 0.0, 4.0}));
  EXPECT_NEAR(weighted_pool(s, 1, zero_conv()).depth.item(), 3.0, 1e-7);
}

TEST(WeightedPool, MatchesPatchLoopOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = SparseDepth::from_depth(random_sparse_depth(16, 16, 0.3, rng));
    for (int level = 1; level <= 4; ++level) {
      const auto conv = random_conv(rng);
      EXPECT_LT(max_abs_diff(weighted_pool(s, level, conv).depth, testing::pool_oracle(s, level, conv)), 1e-10);
    }
  }
}

TEST(WeightedPool, ValidOutputsStayWithinPatchRange) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = SparseDepth::from_depth(random_sparse_depth(16, 16, 0.2, rng));
    const int level = 1 + trial % 4;
    const std::int64_t k = std::int64_t{1} << level;
    const auto out = weighted_pool(s, level, random_conv(rng, 0.03));
    for (std::int64_t py = 0; py < 16 / k; ++py)
      for (std::int64_t px = 0; px < 16 / k; ++px) {
        double lo = 1e300, hi = -1e300;
        bool any = false;
        for (std::int64_t y = py * k; y < (py + 1) * k; ++y)
          for (std::int64_t x = px * k; x < (px + 1) * k; ++x) {
            if (s.mask.at(0, 0, y, x) == 0.0) continue;
            any = true;
            lo = std::min(lo, s.depth.at(0, 0, y, x));
            hi = std::max(hi, s.depth.at(0, 0, y, x));
          }
        // Mask is the OR over the patch.
        EXPECT_EQ(out.mask.at(0, 0, py, px), any ? 1.0 : 0.0);
        const double v = out.depth.at(0, 0, py, px);
        if (any) {
          EXPECT_GE(v, lo * (1 - 1e-6));
          EXPECT_LE(v, hi);
        } else {
          EXPECT_EQ(v, 0.0);
        }
      }
  }
}

TEST(WeightedPool, IndivisibleSizeIsRejected) {
  const auto s = SparseDepth::empty_like(Tensor::zeros({1, 1, 12, 12}));
  EXPECT_THROW(weighted_pool(s, 3, zero_conv()), DimensionError);
}

TEST(WeightedPool, GradientReachesConv) {
  std::mt19937_64 rng(4);
  const auto s = SparseDepth::from_depth(random_sparse_depth(8, 8, 0.5, rng));
  auto conv = random_conv(rng);
  conv.weight.set_requires_grad(true);
  conv.bias.set_requires_grad(true);
  Tensor params[] = {conv.weight, conv.bias};
  const auto proj = random_tensor({1, 1, 2, 2}, rng);
  const auto report = gradcheck(
      [&] { return ops::sum(ops::mul(weighted_pool(s, 2, conv).depth, proj)); }, params);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
}

PoolingParams random_pooling(std::mt19937_64& rng) {
  PoolingParams p;
  for (int i = 0; i < 4; ++i) p.level_convs.push_back(random_conv(rng));
  return p;
}

TEST(BuildPyramid, DenseInputUniformWeightsGivesBlockMeans) {
  std::mt19937_64 rng(5);
  const auto depth = random_tensor({1, 1, 32, 32}, rng, 1.0, 9.0);
  PoolingParams p;
  for (int i = 0; i < 4; ++i) p.level_convs.push_back(zero_conv());
  const auto pyr = build_pyramid(SparseDepth::from_depth(depth), p);
  ASSERT_EQ(pyr.levels.size(), 5u);
  EXPECT_TRUE(bit_equal(pyr.levels[0].depth, depth));
  for (int level = 1; level <= 4; ++level) {
    const std::int64_t k = std::int64_t{1} << level;
    const auto& lv = pyr.levels[static_cast<std::size_t>(level)];
    ASSERT_EQ(lv.depth.shape(), (Shape{1, 1, 32 / k, 32 / k}));
    for (std::int64_t py = 0; py < 32 / k; ++py)
      for (std::int64_t px = 0; px < 32 / k; ++px) {
        double sum = 0.0;
        for (std::int64_t y = py * k; y < (py + 1) * k; ++y)
          for (std::int64_t x = px * k; x < (px + 1) * k; ++x) sum += depth.at(0, 0, y, x);
        EXPECT_NEAR(lv.depth.at(0, 0, py, px), sum / static_cast<double>(k * k), 1e-7);
      }
  }
}

TEST(BuildPyramid, EmptyInputGivesEmptyLevels) {
  std::mt19937_64 rng(6);
  const auto pyr = build_pyramid(SparseDepth::empty_like(Tensor::zeros({1, 1, 16, 32})), random_pooling(rng));
  for (const auto& lv : pyr.levels) {
    EXPECT_EQ(lv.valid_count(), 0);
    for (double v : lv.depth.data()) EXPECT_EQ(v, 0.0);
  }
}

TEST(BuildPyramid, SingleMeasurementAppearsOncePerLevel) {
  std::mt19937_64 rng(7);
  std::vector<double> d(32 * 32, 0.0);
  d[19 * 32 + 6] = 4.25;
  const auto pyr = build_pyramid(SparseDepth::from_depth(Tensor({1, 1, 32, 32}, d)), random_pooling(rng));
  for (int level = 0; level < 5; ++level) {
    const auto& lv = pyr.levels[static_cast<std::size_t>(level)];
    EXPECT_EQ(lv.valid_count(), 1);
    EXPECT_NEAR(lv.depth.at(0, 0, 19 >> level, 6 >> level), 4.25, 1e-6);
  }
}

TEST(BuildPyramid, RequiresMultipleOf16) {
  std::mt19937_64 rng(8);
  EXPECT_THROW(build_pyramid(SparseDepth::empty_like(Tensor::zeros({1, 1, 24, 32})), random_pooling(rng)),
               DimensionError);
}

TEST(SparsitySample, FullFractionIsIdentity) {
  std::mt19937_64 rng(9);
  const auto s = SparseDepth::from_depth(random_sparse_depth(16, 16, 0.4, rng));
  const auto out = sparsity_sample(s, 1.0, 3);
  EXPECT_TRUE(bit_equal(out.depth, s.depth));
  EXPECT_TRUE(bit_equal(out.mask, s.mask));
}

TEST(SparsitySample, KeepsExactCountWithUnchangedValues) {
  std::vector<double> d(20 * 20, 0.0);
  for (int i = 0; i < 100; ++i) d[static_cast<std::size_t>(i * 4)] = 1.0 + 0.01 * i;
  const auto s = SparseDepth::from_depth(Tensor({1, 1, 20, 20}, d));
  const auto out = sparsity_sample(s, 0.4, 17);
  EXPECT_EQ(out.valid_count(), 40);
  out.validate();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (out.mask.data()[i] == 1.0) {
      EXPECT_EQ(out.depth.data()[i], d[i]);
    }
  }
}

TEST(SparsitySample, SameSeedIsBitIdentical) {
  std::mt19937_64 rng(10);
  const auto s = SparseDepth::from_depth(random_sparse_depth(16, 16, 0.5, rng));
  const auto a = sparsity_sample(s, 0.6, 99), b = sparsity_sample(s, 0.6, 99), c = sparsity_sample(s, 0.6, 100);
  EXPECT_TRUE(bit_equal(a.depth, b.depth));
  EXPECT_TRUE(bit_equal(a.mask, b.mask));
  EXPECT_FALSE(bit_equal(a.mask, c.mask));
}

TEST(SparsitySample, FractionOutOfRangeIsRejected) {
  const auto s = SparseDepth::empty_like(Tensor::zeros({1, 1, 4, 4}));
  EXPECT_THROW(sparsity_sample(s, 0.0, 1), DimensionError);
  EXPECT_THROW(sparsity_sample(s, 1.5, 1), DimensionError);
}

}  // namespace
}  // namespace lpnet
