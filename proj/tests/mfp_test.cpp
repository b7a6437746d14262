#include <gtest/gtest.h>

#include "lpnet/errors.hpp"
#include "lpnet/gradcheck.hpp"
#include "lpnet/mfp.hpp"
#include "lpnet/ops.hpp"
#include "test_util.hpp"

namespace lpnet {
namespace {

using testing::bit_equal;
using testing::random_tensor;

void fill(MFPParams& p, std::mt19937_64& rng, double scale) {
  p.visit("mfp", [&](const std::string&, Tensor& t) {
    t = scale == 0.0 ? Tensor::zeros(t.shape()) : random_tensor(t.shape(), rng, -scale, scale);
  });
}

TEST(MFP, ZeroParametersPassInputThrough) {
  std::mt19937_64 rng(1);
  for (int paths : {1, 2, 4}) {
    auto p = MFPParams::create(8, paths, 0.1, rng);
    fill(p, rng, 0.0);
    const auto x = random_tensor({2, 8, 16, 16}, rng);
    EXPECT_TRUE(bit_equal(mfp_forward(x, p), x)) << paths;
  }
}

TEST(MFP, ShapeIsPreserved) {
  std::mt19937_64 rng(2);
  for (int paths = 1; paths <= 4; ++paths) {
    const auto p = MFPParams::create(4 * paths, paths, 0.1, rng);
    const auto x = random_tensor({1, 4 * paths, 16, 32}, rng);
    EXPECT_EQ(mfp_forward(x, p).shape(), x.shape());
  }
}

TEST(MFP, ConstantInputGivesConstantInterior) {
  std::mt19937_64 rng(3);
  auto p = MFPParams::create(6, 2, 0.1, rng);
  fill(p, rng, 0.3);
  const auto x = Tensor::full({1, 6, 32, 32}, 1.7);
  const auto y = mfp_forward(x, p);
  // Zero padding perturbs the top/left band reached by the deepest path's
  // first row/column and the outer ring of the merge conv.
  for (std::int64_t c = 0; c < 6; ++c) {
    const double ref = y.at(0, c, 16, 16);
    for (std::int64_t r = 8; r < 31; ++r) {
      for (std::int64_t q = 8; q < 31; ++q) EXPECT_NEAR(y.at(0, c, r, q), ref, 1e-12);
    }
  }
}

TEST(MFP, PathResolutionsHalvePerConv) {
  std::mt19937_64 rng(4);
  auto p = MFPParams::create(8, 4, 0.1, rng);
  fill(p, rng, 0.2);
  MFPTrace trace;
  mfp_forward(random_tensor({1, 8, 16, 16}, rng), p, &trace);
  ASSERT_EQ(trace.path_shapes.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    ASSERT_EQ(trace.path_shapes[i].size(), i + 1);
    const std::int64_t side = 16 >> (i + 1);
    EXPECT_EQ(trace.path_shapes[i].back(), (Shape{1, 2, side, side}));
    EXPECT_EQ(p.path_convs[i].size(), i + 1);
  }
}

TEST(MFP, InvalidConfigurationsAreRejected) {
  std::mt19937_64 rng(5);
  EXPECT_THROW(MFPParams::create(6, 4, 0.1, rng), DimensionError);
  const auto p = MFPParams::create(8, 4, 0.1, rng);
  EXPECT_THROW(mfp_forward(Tensor::zeros({1, 8, 8, 8}), p), DimensionError);
  EXPECT_THROW(mfp_forward(Tensor::zeros({1, 12, 16, 16}), p), DimensionError);
}

TEST(MFP, GradCheck) {
  std::mt19937_64 rng(6);
  auto p = MFPParams::create(4, 2, 0.1, rng);
  fill(p, rng, 0.4);
  std::vector<Tensor> params;
  p.visit("mfp", [&](const std::string&, Tensor& t) {
    t.set_requires_grad(true);
    params.push_back(t);
  });
  const auto x = random_tensor({1, 4, 8, 8}, rng);
  const auto proj = random_tensor({1, 4, 8, 8}, rng);
  GradCheckOptions opt;
  opt.max_checks_per_param = 6;
  const auto report = gradcheck([&] { return ops::sum(ops::mul(mfp_forward(x, p), proj)); }, params, opt);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
}

}  // namespace
}  // namespace lpnet
