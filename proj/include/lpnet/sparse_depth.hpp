#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "lpnet/layers.hpp"
#include "lpnet/tensor.hpp"

namespace lpnet {

inline constexpr double kPoolEpsilon = 1e-8;
inline constexpr int kPyramidLevels = 5;  // scales 1/1 .. 1/16

/// Depth in meters with a {0,1} validity mask, both N x 1 x H x W.
/// Invalid pixels carry depth 0.
struct SparseDepth {
  Tensor depth;
  Tensor mask;

  // Mask derived from depth > 0.
  static SparseDepth from_depth(const Tensor& depth);
  static SparseDepth empty_like(const Tensor& depth);

  // Throws DimensionError when the invariants do not hold.
  void validate() const;
  std::int64_t valid_count() const;
};

// One 3x3 conv (2 -> 1 channels over depth and mask) per coarse level 1..4.
struct PoolingParams {
  std::vector<Conv2d> level_convs;

  static PoolingParams create(std::mt19937_64& rng);
  const Conv2d& conv_for(int level) const;
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

/// Learned weighted pooling into 2^level x 2^level patches:
/// sum(w * S) / (sum(valid * w) + eps) with w = exp(conv(cat(depth, mask)))
/// evaluated at full resolution. A coarse pixel is valid iff its patch holds
/// at least one valid pixel; invalid coarse pixels are 0.
SparseDepth weighted_pool(const SparseDepth& s, int level, const Conv2d& weight_conv);

struct PooledPyramid {
  std::vector<SparseDepth> levels;  // index i is scale 1 / 2^i
};

PooledPyramid build_pyramid(const SparseDepth& s, const PoolingParams& params);

// Keeps floor(keep_fraction * valid) measurements chosen uniformly without replacement.
SparseDepth sparsity_sample(const SparseDepth& s, double keep_fraction, std::uint64_t seed);

}  // namespace lpnet
