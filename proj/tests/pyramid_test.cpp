#include <gtest/gtest.h>

#include "lpnet/errors.hpp"
#include "lpnet/ops.hpp"
#include "lpnet/pyramid.hpp"
#include "lpnet/scene.hpp"
#include "test_util.hpp"

namespace lpnet {
namespace {

using testing::bit_equal;
using testing::max_abs_diff;
using testing::random_tensor;

Tensor block_mean_oracle(const Tensor& x, std::int64_t k) {
  std::vector<double> out;
  for (std::int64_t n = 0; n < x.n(); ++n)
    for (std::int64_t c = 0; c < x.c(); ++c)
      for (std::int64_t y = 0; y < x.h() / k; ++y)
        for (std::int64_t xx = 0; xx < x.w() / k; ++xx) {
          double s = 0.0;
          for (std::int64_t dy = 0; dy < k; ++dy)
            for (std::int64_t dx = 0; dx < k; ++dx) s += x.at(n, c, y * k + dy, xx * k + dx);
          out.push_back(s / static_cast<double>(k * k));
        }
  return Tensor({x.n(), x.c(), x.h() / k, x.w() / k}, std::move(out));
}

TEST(Down, MeanOfFour) {
  EXPECT_EQ(down(Tensor({1, 1, 2, 2}, {0, 1, 2, 3})).item(), 1.5);
}

TEST(Down, ConstantStaysConstant) {
  const auto y = down(Tensor::full({1, 2, 6, 4}, 2.5));
  EXPECT_EQ(y.shape(), (Shape{1, 2, 3, 2}));
  for (double v : y.data()) EXPECT_EQ(v, 2.5);
}

TEST(Down, MatchesPatchMeanOracle) {
  std::mt19937_64 rng(1);
  const auto x = random_tensor({2, 3, 8, 8}, rng);
  EXPECT_LT(max_abs_diff(down(x), block_mean_oracle(x, 2)), 1e-12);
}

TEST(Down, OddSizeIsRejected) {
  EXPECT_THROW(down(Tensor::zeros({1, 1, 3, 4})), DimensionError);
}

TEST(Up, DoublesSizeAndKeepsConstants) {
  const auto y = up(Tensor::full({1, 1, 3, 5}, -1.25));
  EXPECT_EQ(y.shape(), (Shape{1, 1, 6, 10}));
  for (double v : y.data()) EXPECT_EQ(v, -1.25);
  const auto c = Tensor::full({1, 1, 8, 8}, 7.0);
  EXPECT_TRUE(bit_equal(up(down(c)), c));
}

TEST(Up, TwoByTwoMatchesHalfPixelOracle) {
  const Tensor x({1, 1, 2, 2}, {1, 5, -2, 4});
  const auto y = up(x);
  for (std::int64_t r = 0; r < 4; ++r) {
    for (std::int64_t c = 0; c < 4; ++c) {
      const double sy = (static_cast<double>(r) + 0.5) / 2.0 - 0.5;
      const double sx = (static_cast<double>(c) + 0.5) / 2.0 - 0.5;
      EXPECT_NEAR(y.at(0, 0, r, c), testing::bilinear_read(x, 0, 0, sy, sx), 1e-15);
    }
  }
}

TEST(Laplacian, TwoLevelsFollowTheDefinition) {
  std::mt19937_64 rng(2);
  const auto x = random_tensor({1, 1, 8, 8}, rng);
  const auto lv = laplacian_decompose(x, 2);
  ASSERT_EQ(lv.level_count(), 2);
  const auto residual = down(down(x));
  EXPECT_TRUE(bit_equal(lv.residual, residual));
  EXPECT_LT(max_abs_diff(lv.bandpass[1], ops::sub(down(x), up(residual))), 1e-15);
  EXPECT_LT(max_abs_diff(lv.bandpass[0], ops::sub(x, up(down(x)))), 1e-15);
  EXPECT_EQ(lv.bandpass[0].shape(), (Shape{1, 1, 8, 8}));
  EXPECT_EQ(lv.bandpass[1].shape(), (Shape{1, 1, 4, 4}));
  EXPECT_EQ(lv.residual.shape(), (Shape{1, 1, 2, 2}));
}

TEST(Laplacian, ImpulseMatchesComposedOracle) {
  std::vector<double> v(64, 0.0);
  v[4 * 8 + 4] = 1.0;
  const Tensor x({1, 1, 8, 8}, v);
  const auto lv = laplacian_decompose(x, 3);
  // Literal application of the level recursion.
  Tensor cur = x;
  for (int i = 0; i < 3; ++i) {
    const Tensor low = block_mean_oracle(cur, 2);
    std::vector<double> band;
    const Tensor up_low = up(low);
    for (std::int64_t r = 0; r < cur.h(); ++r)
      for (std::int64_t c = 0; c < cur.w(); ++c) band.push_back(cur.at(0, 0, r, c) - up_low.at(0, 0, r, c));
    EXPECT_LT(max_abs_diff(lv.bandpass[static_cast<std::size_t>(i)], Tensor(cur.shape(), band)), 1e-15);
    cur = low;
  }
  EXPECT_LT(max_abs_diff(lv.residual, cur), 1e-15);
}

TEST(Laplacian, ConstantHasZeroBandpass) {
  const auto lv = laplacian_decompose(Tensor::full({1, 1, 16, 16}, 3.75), 4);
  for (const auto& b : lv.bandpass) {
    for (double v : b.data()) EXPECT_EQ(v, 0.0);
  }
  for (double v : lv.residual.data()) EXPECT_EQ(v, 3.75);
}

TEST(Laplacian, ZeroLevelsIsResidualOnly) {
  std::mt19937_64 rng(3);
  const auto x = random_tensor({1, 1, 5, 7}, rng);
  const auto lv = laplacian_decompose(x, 0);
  EXPECT_EQ(lv.level_count(), 0);
  EXPECT_TRUE(bit_equal(lv.residual, x));
  EXPECT_TRUE(bit_equal(laplacian_reconstruct(lv), x));
}

TEST(Laplacian, IndivisibleSizeIsRejected) {
  EXPECT_THROW(laplacian_decompose(Tensor::zeros({1, 1, 12, 16}), 3), DimensionError);
  EXPECT_THROW(laplacian_decompose(Tensor::zeros({1, 1, 16, 16}), -1), DimensionError);
}

TEST(Laplacian, ZeroBandpassReconstructsUpUp) {
  std::mt19937_64 rng(4);
  LaplacianLevels lv;
  lv.residual = random_tensor({1, 1, 3, 3}, rng);
  lv.bandpass = {Tensor::zeros({1, 1, 12, 12}), Tensor::zeros({1, 1, 6, 6})};
  EXPECT_LT(max_abs_diff(laplacian_reconstruct(lv), up(up(lv.residual))), 1e-15);
}

TEST(Laplacian, ShapeChainMismatchIsRejected) {
  LaplacianLevels lv;
  lv.residual = Tensor::zeros({1, 1, 3, 3});
  lv.bandpass = {Tensor::zeros({1, 1, 12, 12}), Tensor::zeros({1, 1, 5, 6})};
  EXPECT_THROW(laplacian_reconstruct(lv), DimensionError);
}

TEST(Laplacian, RoundTripOnRandomMaps) {
  std::mt19937_64 rng(5);
  for (int levels = 1; levels <= 4; ++levels) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto x = random_tensor({1, 2, 32, 48}, rng, -100.0, 100.0);
      EXPECT_LT(max_abs_diff(laplacian_reconstruct(laplacian_decompose(x, levels)), x), 1e-10);
    }
  }
}

TEST(Laplacian, RoundTripOnSceneDepth) {
  const auto scene = generate_scene(random_scene_spec(9, 64, 64, 100));
  const auto lv = laplacian_decompose(scene.gt.depth, 4);
  EXPECT_LT(max_abs_diff(laplacian_reconstruct(lv), scene.gt.depth), 1e-10);
}

TEST(Laplacian, DecompositionIsLinear) {
  std::mt19937_64 rng(6);
  const auto x = random_tensor({1, 1, 16, 16}, rng), y = random_tensor({1, 1, 16, 16}, rng);
  const double a = 2.5, b = -0.75;
  const auto mix = laplacian_decompose(ops::add(ops::scale(x, a), ops::scale(y, b)), 3);
  const auto lx = laplacian_decompose(x, 3), ly = laplacian_decompose(y, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto expect = ops::add(ops::scale(lx.bandpass[i], a), ops::scale(ly.bandpass[i], b));
    EXPECT_LT(max_abs_diff(mix.bandpass[i], expect), 1e-10);
  }
  EXPECT_LT(max_abs_diff(mix.residual, ops::add(ops::scale(lx.residual, a), ops::scale(ly.residual, b))), 1e-10);
}

}  // namespace
}  // namespace lpnet
