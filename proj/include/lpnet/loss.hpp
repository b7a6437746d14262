#pragma once

#include <array>
#include <cstdint>

#include "lpnet/network.hpp"
#include "lpnet/sparse_depth.hpp"

namespace lpnet {

struct LossReport {
  double total = 0.0;
  std::array<double, kScales> mse{};  // per scale, already divided by |V|
  std::array<double, kScales> mae{};
  std::int64_t valid_count = 0;
};

struct LossResult {
  Tensor total;  // differentiable scalar
  LossReport report;
};

/// Sum over computed scales of the squared plus absolute error between the
/// bilinearly upsampled prediction and the ground truth on valid pixels,
/// each scale term normalized by the valid count. `scale_weights` multiplies
/// the per-scale terms (all ones by default).
LossResult multiscale_loss(const DepthPyramid& pyramid, const SparseDepth& gt,
                           const std::array<double, kScales>& scale_weights = {1, 1, 1, 1, 1});

}  // namespace lpnet
