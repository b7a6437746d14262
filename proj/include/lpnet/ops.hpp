#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lpnet/tensor.hpp"

namespace lpnet::ops {

// Logits above this are clamped before exponentiation.
inline constexpr double kExpInputMax = 40.0;

// weight: OutC x InC x kh x kw; bias: OutC or undefined.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::int64_t stride,
              std::int64_t padding);

// weight: InC x OutC x kh x kw (same tensor as the conv2d it is the adjoint of).
// Output size (H-1)*stride - 2*padding + kh + output_padding; output_padding < stride.
Tensor conv2d_transpose(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        std::int64_t stride, std::int64_t padding, std::int64_t output_padding = 0);

// Half-pixel (align-corners-false) bilinear resampling with edge clamping.
Tensor bilinear_resize(const Tensor& input, std::int64_t out_h, std::int64_t out_w);

Tensor softmax_channel(const Tensor& input);

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
// exp(min(x, kExpInputMax)); zero gradient where clamped.
Tensor exp(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);
// ln(1 + e^x), evaluated without overflow.
Tensor softplus(const Tensor& x);
// Subgradient 0 at the origin.
Tensor abs(const Tensor& x);
Tensor square(const Tensor& x);

// Elementwise; shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
// 1 - x, exact at both endpoints of [0, 1].
Tensor one_minus(const Tensor& x);

Tensor concat_channels(std::span<const Tensor> parts);
std::vector<Tensor> split_channels(const Tensor& input, std::span<const std::int64_t> counts);

// input: N x C x H x W; coords: N x 2 x Ho x Wo absolute (row, col) positions.
// Out-of-range coordinates clamp to the border.
Tensor sample_bilinear_at(const Tensor& input, const Tensor& coords);

// Sum over non-overlapping k x k windows; H and W must be divisible by k.
Tensor sum_pool(const Tensor& input, std::int64_t k);

Tensor sum(const Tensor& x);
// N x C x H x W -> N x 1 x H x W.
Tensor sum_channels(const Tensor& x);
// N x 1 x H x W -> N x C x H x W.
Tensor repeat_channels(const Tensor& x, std::int64_t channels);

}  // namespace lpnet::ops
