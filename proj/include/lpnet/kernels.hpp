#pragma once

#include <cstdint>
#include <span>

namespace lpnet {

/// Geometry of a single-sample 2-D convolution from (in_c, in_h, in_w) to
/// (out_c, out_h, out_w). Transposed convolution reuses it with the roles of
/// input and output swapped.
struct ConvGeometry {
  std::int64_t in_c = 0, in_h = 0, in_w = 0;
  std::int64_t out_c = 0, out_h = 0, out_w = 0;
  std::int64_t kh = 0, kw = 0;
  std::int64_t stride = 1, pad = 0;

  std::int64_t col_rows() const { return in_c * kh * kw; }
  std::int64_t col_cols() const { return out_h * out_w; }
  bool is_pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

ConvGeometry make_conv_geometry(std::int64_t in_c, std::int64_t in_h, std::int64_t in_w,
                                std::int64_t out_c, std::int64_t kh, std::int64_t kw,
                                std::int64_t stride, std::int64_t pad);

// Production kernels: OpenMP over independent planes or rows, Eigen GEMM for
// the convolution contractions. Backward kernels accumulate into their
// gradient outputs.
namespace kernels {

void im2col(const double* image, const ConvGeometry& g, double* col);
void col2im_add(const double* col, const ConvGeometry& g, double* image);

void conv2d_forward(std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::int64_t batch, const ConvGeometry& g,
                    std::span<double> output);
void conv2d_backward(std::span<const double> input, std::span<const double> weight,
                     std::span<const double> grad_out, std::int64_t batch, const ConvGeometry& g,
                     double* grad_input, double* grad_weight, double* grad_bias);

// `g` describes the forward convolution whose adjoint this is: g.in_* is the
// transposed-conv output, g.out_* its input. Weight layout g.out_c x g.in_c x kh x kw.
void conv2d_transpose_forward(std::span<const double> input, std::span<const double> weight,
                              std::span<const double> bias, std::int64_t batch,
                              const ConvGeometry& g, std::span<double> output);
void conv2d_transpose_backward(std::span<const double> input, std::span<const double> weight,
                               std::span<const double> grad_out, std::int64_t batch,
                               const ConvGeometry& g, double* grad_input, double* grad_weight,
                               double* grad_bias);

void bilinear_resize_forward(std::span<const double> input, std::int64_t planes, std::int64_t in_h,
                             std::int64_t in_w, std::int64_t out_h, std::int64_t out_w,
                             std::span<double> output);
void bilinear_resize_backward(std::span<const double> grad_out, std::int64_t planes,
                              std::int64_t in_h, std::int64_t in_w, std::int64_t out_h,
                              std::int64_t out_w, std::span<double> grad_input);

// coords: batch x 2 x out_h x out_w, channel 0 = row (y), channel 1 = column (x).
void sample_bilinear_forward(std::span<const double> input, std::span<const double> coords,
                             std::int64_t batch, std::int64_t channels, std::int64_t in_h,
                             std::int64_t in_w, std::int64_t out_h, std::int64_t out_w,
                             std::span<double> output);
void sample_bilinear_backward(std::span<const double> input, std::span<const double> coords,
                              std::span<const double> grad_out, std::int64_t batch,
                              std::int64_t channels, std::int64_t in_h, std::int64_t in_w,
                              std::int64_t out_h, std::int64_t out_w, double* grad_input,
                              double* grad_coords);

// Non-overlapping k x k window sums.
void sum_pool_forward(std::span<const double> input, std::int64_t planes, std::int64_t in_h,
                      std::int64_t in_w, std::int64_t k, std::span<double> output);
void sum_pool_backward(std::span<const double> grad_out, std::int64_t planes, std::int64_t in_h,
                       std::int64_t in_w, std::int64_t k, std::span<double> grad_input);

}  // namespace kernels

// Serial reference implementations written as literal loops. They define the
// expected results for the production kernels and are the baseline in the
// benchmark.
namespace reference {

void conv2d_forward(std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::int64_t batch, const ConvGeometry& g,
                    std::span<double> output);
void conv2d_transpose_forward(std::span<const double> input, std::span<const double> weight,
                              std::span<const double> bias, std::int64_t batch,
                              const ConvGeometry& g, std::span<double> output);
void bilinear_resize_forward(std::span<const double> input, std::int64_t planes, std::int64_t in_h,
                             std::int64_t in_w, std::int64_t out_h, std::int64_t out_w,
                             std::span<double> output);
void sample_bilinear_forward(std::span<const double> input, std::span<const double> coords,
                             std::int64_t batch, std::int64_t channels, std::int64_t in_h,
                             std::int64_t in_w, std::int64_t out_h, std::int64_t out_w,
                             std::span<double> output);
void sum_pool_forward(std::span<const double> input, std::int64_t planes, std::int64_t in_h,
                      std::int64_t in_w, std::int64_t k, std::span<double> output);

}  // namespace reference

}  // namespace lpnet
