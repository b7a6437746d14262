#pragma once

#include <vector>

#include "lpnet/tensor.hpp"

namespace lpnet {

// 2x2 average pooling; H and W must be even.
Tensor down(const Tensor& x);
// Bilinear x2 upsampling.
Tensor up(const Tensor& x);

/// Laplacian pyramid of an N x C x H x W tensor.
///
/// bandpass[0] is the full-resolution detail image, bandpass[i] has half the
/// size of bandpass[i-1], and residual is the low-frequency remainder at
/// 1 / 2^levels scale.
struct LaplacianLevels {
  std::vector<Tensor> bandpass;
  Tensor residual;

  int level_count() const { return static_cast<int>(bandpass.size()); }
};

// Requires H and W divisible by 2^levels; odd sizes are rejected, not padded.
LaplacianLevels laplacian_decompose(const Tensor& x, int levels);
Tensor laplacian_reconstruct(const LaplacianLevels& levels);

}  // namespace lpnet
