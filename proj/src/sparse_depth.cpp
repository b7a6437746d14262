#include "lpnet/sparse_depth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lpnet/errors.hpp"
#include "lpnet/ops.hpp"
#include "lpnet/rng.hpp"

namespace lpnet {

SparseDepth SparseDepth::from_depth(const Tensor& depth) {
  std::vector<double> mask(static_cast<std::size_t>(depth.numel()));
  auto d = depth.data();
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = d[i] > 0.0 ? 1.0 : 0.0;
  SparseDepth s{depth, Tensor(depth.shape(), std::move(mask))};
  s.validate();
  return s;
}

SparseDepth SparseDepth::empty_like(const Tensor& depth) {
  return SparseDepth{Tensor::zeros(depth.shape()), Tensor::zeros(depth.shape())};
}

void SparseDepth::validate() const {
  if (depth.rank() != 4 || depth.c() != 1) {
    throw DimensionError("SparseDepth: depth must be N x 1 x H x W, got " + shape_str(depth.shape()));
  }
  if (mask.shape() != depth.shape()) throw DimensionError("SparseDepth: mask/depth shape mismatch");
  auto d = depth.data();
  auto m = mask.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (m[i] != 0.0 && m[i] != 1.0) throw DimensionError("SparseDepth: mask values must be 0 or 1");
    if (d[i] < 0.0) throw DimensionError("SparseDepth: negative depth");
    if (m[i] == 0.0 && d[i] != 0.0) throw DimensionError("SparseDepth: depth set at invalid pixel");
  }
}

std::int64_t SparseDepth::valid_count() const {
  auto m = mask.data();
  return static_cast<std::int64_t>(std::count(m.begin(), m.end(), 1.0));
}

PoolingParams PoolingParams::create(std::mt19937_64& rng) {
  PoolingParams p;
  for (int level = 1; level < kPyramidLevels; ++level) {
    p.level_convs.push_back(Conv2d::create(2, 1, 3, 1, rng));
  }
  return p;
}

const Conv2d& PoolingParams::conv_for(int level) const {
  if (level < 1 || level > static_cast<int>(level_convs.size())) {
    throw DimensionError("PoolingParams: no conv for level " + std::to_string(level));
  }
  return level_convs[static_cast<std::size_t>(level - 1)];
}

void PoolingParams::visit(const std::string& prefix, const ParamVisitor& fn) {
  for (std::size_t i = 0; i < level_convs.size(); ++i) {
    level_convs[i].visit(prefix + ".level" + std::to_string(i + 1), fn);
  }
}

SparseDepth weighted_pool(const SparseDepth& s, int level, const Conv2d& weight_conv) {
  if (level < 0) throw DimensionError("weighted_pool: level must be >= 0");
  if (level == 0) return s;
  const std::int64_t patch = std::int64_t{1} << level;
  if (s.depth.h() % patch != 0 || s.depth.w() % patch != 0) {
    throw DimensionError("weighted_pool: " + shape_str(s.depth.shape()) +
                         " not divisible by patch " + std::to_string(patch));
  }
  const Tensor features[] = {s.depth, s.mask};
  const Tensor weights = ops::exp(weight_conv(ops::concat_channels(features)));
  const Tensor numerator = ops::sum_pool(ops::mul(weights, s.depth), patch);
  const Tensor denominator = ops::add_scalar(ops::sum_pool(ops::mul(weights, s.mask), patch), kPoolEpsilon);
  Tensor pooled = ops::div(numerator, denominator);

  // Validity is the OR over the patch; computed outside the graph.
  Tensor counts = ops::sum_pool(s.mask, patch);
  std::vector<double> mask(static_cast<std::size_t>(counts.numel()));
  auto cnt = counts.data();
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = cnt[i] > 0.0 ? 1.0 : 0.0;
  return SparseDepth{pooled, Tensor(counts.shape(), std::move(mask))};
}

PooledPyramid build_pyramid(const SparseDepth& s, const PoolingParams& params) {
  const std::int64_t factor = std::int64_t{1} << (kPyramidLevels - 1);
  if (s.depth.h() % factor != 0 || s.depth.w() % factor != 0) {
    throw DimensionError("build_pyramid: " + shape_str(s.depth.shape()) + " not divisible by 16");
  }
  PooledPyramid p;
  p.levels.push_back(s);
  for (int level = 1; level < kPyramidLevels; ++level) {
    p.levels.push_back(weighted_pool(s, level, params.conv_for(level)));
  }
  return p;
}

SparseDepth sparsity_sample(const SparseDepth& s, double keep_fraction, std::uint64_t seed) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw DimensionError("sparsity_sample: keep_fraction must be in (0, 1]");
  }
  auto m = s.mask.data();
  std::vector<std::int64_t> valid;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] == 1.0) valid.push_back(static_cast<std::int64_t>(i));
  }
  const auto keep = static_cast<std::size_t>(std::floor(keep_fraction * static_cast<double>(valid.size())));
  if (keep == valid.size()) return s;

  // Partial Fisher-Yates: the first `keep` slots end up a uniform sample.
  auto rng = make_stream(seed, "sparsity");
  for (std::size_t i = 0; i < keep; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, valid.size() - 1);
    std::swap(valid[i], valid[pick(rng)]);
  }
  std::vector<double> depth(m.size(), 0.0);
  std::vector<double> mask(m.size(), 0.0);
  auto d = s.depth.data();
  for (std::size_t i = 0; i < keep; ++i) {
    const auto idx = static_cast<std::size_t>(valid[i]);
    depth[idx] = d[idx];
    mask[idx] = 1.0;
  }
  return SparseDepth{Tensor(s.depth.shape(), std::move(depth)), Tensor(s.mask.shape(), std::move(mask))};
}

}  // namespace lpnet
