#pragma once

#include <random>
#include <string>

#include "lpnet/layers.hpp"

namespace lpnet {

enum class FilterKind { kSmoothness, kSharpness };

/// Per-pixel deformable kernel.
///
/// weights: N x k^2 x H x W, tap j = row * k + col of the k x k grid.
/// offsets: N x 2k^2 x H x W, channels (2j, 2j+1) = (dy, dx) in pixels
/// relative to the regular grid position of tap j. The center tap offset is 0.
struct KernelField {
  Tensor weights;
  Tensor offsets;
  int kernel = 3;
  FilterKind kind = FilterKind::kSmoothness;
};

// Weight and offset convs for one filter. The offset conv emits 2(k^2 - 1)
// channels: the center tap has no offset output at all.
struct FilterHead {
  Conv2d weight_conv;
  Conv2d offset_conv;

  static FilterHead create(std::int64_t decoder_channels, int kernel, std::mt19937_64& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

struct SDFParams {
  int kernel = 3;
  FilterHead smooth;
  FilterHead sharp;
  Conv2d attention;  // cat(f_dec, d_m, d_a) -> 1

  // Offset convs start at zero so both filters begin on the regular grid.
  static SDFParams create(std::int64_t decoder_channels, int kernel, std::mt19937_64& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

// Smoothness weights: softmax over taps. Sharpness weights: tanh, then the
// per-pixel tap mean is subtracted.
KernelField gen_kernel_field(const Tensor& depth_in, const Tensor& f_dec, const FilterHead& head,
                             int kernel, FilterKind kind);

// sum_j w_j(p) * (depth(p + g_j + o_j(p)) - depth(p)), bilinear with edge
// clamping. Written relative to the center value so that constant depth gives
// an exactly zero response.
Tensor deformable_response(const Tensor& depth, const KernelField& kf);

// sum_j w_j(p) * depth(p + g_j + o_j(p)) for unit-sum weights.
Tensor smoothness_filter(const Tensor& depth, const KernelField& kf);
// depth(p) + sum_j w_j(p) * depth(p + g_j + o_j(p)) for zero-sum weights.
Tensor sharpness_filter(const Tensor& depth, const KernelField& kf);

struct BlendResult {
  Tensor output;
  Tensor selection;  // a in (0, 1); 1 selects the smoothed map
};

// a * d_m + (1 - a) * d_a.
Tensor blend_with(const Tensor& d_m, const Tensor& d_a, const Tensor& selection);
BlendResult selective_blend(const Tensor& d_m, const Tensor& d_a, const Tensor& f_dec,
                            const Conv2d& attention);

struct SDFResult {
  Tensor output;
  Tensor selection;
  Tensor smoothed;
  Tensor sharpened;
};

SDFResult sdf_forward(const Tensor& depth_in, const Tensor& f_dec, const SDFParams& params);

}  // namespace lpnet
