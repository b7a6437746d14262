#include "lpnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lpnet/autograd.hpp"
#include "lpnet/branch_monitor.hpp"
#include "lpnet/errors.hpp"
#include "lpnet/kernels.hpp"

namespace lpnet::ops {

namespace {

constexpr std::int64_t kParallelThreshold = 16384;

Tensor finish(Shape shape, std::vector<double> data, const char* op) {
  Tensor out(std::move(shape), std::move(data));
  check_finite(out, op);
  return out;
}

void record(std::vector<Tensor> inputs, Tensor& out, BackwardFn fn) {
  out.set_requires_grad(true);
  GradTape::active()->push(std::move(inputs), out, std::move(fn));
}

void require_rank4(const Tensor& t, const char* op) {
  if (t.rank() != 4) {
    throw DimensionError(std::string(op) + ": expected N x C x H x W, got " + shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

std::vector<double> buffer(const Tensor& like) {
  return std::vector<double>(static_cast<std::size_t>(like.numel()));
}

// Elementwise unary op. `deriv(x, y)` gives dy/dx from the input and output values.
template <typename F, typename D>
Tensor unary(const Tensor& x, const char* name, F f, D deriv) {
  auto src = x.data();
  auto data = buffer(x);
  const auto n = x.numel();
#pragma omp parallel for simd schedule(static) if (n > kParallelThreshold)
  for (std::int64_t i = 0; i < n; ++i) data[i] = f(src[i]);
  Tensor out = finish(x.shape(), std::move(data), name);
  if (needs_grad({&x})) {
    record({x}, out, [x, out, deriv](std::span<const double> g, std::span<std::vector<double>*> gi) {
      auto xs = x.data();
      auto ys = out.data();
      auto& dst = *gi[0];
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i] * deriv(xs[i], ys[i]);
    });
  }
  return out;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::int64_t stride,
              std::int64_t padding) {
  require_rank4(input, "conv2d");
  require_rank4(weight, "conv2d weight");
  if (weight.dim(1) != input.c()) {
    throw DimensionError("conv2d: weight expects " + std::to_string(weight.dim(1)) +
                         " input channels, input has " + std::to_string(input.c()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != weight.dim(0))) {
    throw DimensionError("conv2d: bias must have OutC elements");
  }
  const auto g = make_conv_geometry(input.c(), input.h(), input.w(), weight.dim(0), weight.dim(2),
                                    weight.dim(3), stride, padding);
  const auto batch = input.n();
  std::vector<double> data(static_cast<std::size_t>(batch * g.out_c * g.out_h * g.out_w));
  const std::span<const double> bias_data = bias.defined() ? bias.data() : std::span<const double>{};
  kernels::conv2d_forward(input.data(), weight.data(), bias_data, batch, g, data);
  Tensor out = finish({batch, g.out_c, g.out_h, g.out_w}, std::move(data), "conv2d");
  if (needs_grad({&input, &weight, &bias})) {
    record({input, weight, bias}, out,
           [input, weight, g, batch](std::span<const double> grad, std::span<std::vector<double>*> gi) {
             kernels::conv2d_backward(input.data(), weight.data(), grad, batch, g,
                                      gi[0] ? gi[0]->data() : nullptr,
                                      gi[1] ? gi[1]->data() : nullptr,
                                      gi[2] ? gi[2]->data() : nullptr);
           });
  }
  return out;
}

Tensor conv2d_transpose(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        std::int64_t stride, std::int64_t padding, std::int64_t output_padding) {
  require_rank4(input, "conv2d_transpose");
  require_rank4(weight, "conv2d_transpose weight");
  if (weight.dim(0) != input.c()) {
    throw DimensionError("conv2d_transpose: weight expects " + std::to_string(weight.dim(0)) +
                         " input channels, input has " + std::to_string(input.c()));
  }
  if (stride < 1 || padding < 0) throw DimensionError("conv2d_transpose: bad stride/padding");
  if (output_padding < 0 || output_padding >= stride) {
    throw DimensionError("conv2d_transpose: output_padding must be in [0, stride)");
  }
  const auto out_c = weight.dim(1);
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != out_c)) {
    throw DimensionError("conv2d_transpose: bias must have OutC elements");
  }
  const auto kh = weight.dim(2), kw = weight.dim(3);
  const auto out_h = (input.h() - 1) * stride - 2 * padding + kh + output_padding;
  const auto out_w = (input.w() - 1) * stride - 2 * padding + kw + output_padding;
  if (out_h < 1 || out_w < 1) throw DimensionError("conv2d_transpose: empty output");

  // Geometry of the forward conv mapping the output back onto the input grid.
  auto g = make_conv_geometry(out_c, out_h, out_w, input.c(), kh, kw, stride, padding);
  if (g.out_h != input.h() || g.out_w != input.w()) {
    throw DimensionError("conv2d_transpose: inconsistent geometry");
  }
  const auto batch = input.n();
  std::vector<double> data(static_cast<std::size_t>(batch * out_c * out_h * out_w));
  const std::span<const double> bias_data = bias.defined() ? bias.data() : std::span<const double>{};
  kernels::conv2d_transpose_forward(input.data(), weight.data(), bias_data, batch, g, data);
  Tensor out = finish({batch, out_c, out_h, out_w}, std::move(data), "conv2d_transpose");
  if (needs_grad({&input, &weight, &bias})) {
    record({input, weight, bias}, out,
           [input, weight, g, batch](std::span<const double> grad, std::span<std::vector<double>*> gi) {
             kernels::conv2d_transpose_backward(input.data(), weight.data(), grad, batch, g,
                                                gi[0] ? gi[0]->data() : nullptr,
                                                gi[1] ? gi[1]->data() : nullptr,
                                                gi[2] ? gi[2]->data() : nullptr);
           });
  }
  return out;
}

Tensor bilinear_resize(const Tensor& input, std::int64_t out_h, std::int64_t out_w) {
  require_rank4(input, "bilinear_resize");
  if (out_h < 1 || out_w < 1) throw DimensionError("bilinear_resize: target dims must be >= 1");
  if (out_h == input.h() && out_w == input.w()) return input;
  const auto planes = input.n() * input.c();
  const auto in_h = input.h(), in_w = input.w();
  std::vector<double> data(static_cast<std::size_t>(planes * out_h * out_w));
  kernels::bilinear_resize_forward(input.data(), planes, in_h, in_w, out_h, out_w, data);
  Tensor out = finish({input.n(), input.c(), out_h, out_w}, std::move(data), "bilinear_resize");
  if (needs_grad({&input})) {
    record({input}, out,
           [planes, in_h, in_w, out_h, out_w](std::span<const double> g,
                                              std::span<std::vector<double>*> gi) {
             kernels::bilinear_resize_backward(g, planes, in_h, in_w, out_h, out_w, *gi[0]);
           });
  }
  return out;
}

Tensor softmax_channel(const Tensor& input) {
  require_rank4(input, "softmax_channel");
  const auto n = input.n(), c = input.c(), plane = input.h() * input.w();
  auto src = input.data();
  auto data = buffer(input);
#pragma omp parallel for schedule(static) if (n * c * plane > kParallelThreshold)
  for (std::int64_t b = 0; b < n; ++b) {
    const double* x = src.data() + b * c * plane;
    double* y = data.data() + b * c * plane;
    for (std::int64_t p = 0; p < plane; ++p) {
      double mx = x[p];
      for (std::int64_t k = 1; k < c; ++k) mx = std::max(mx, x[k * plane + p]);
      double total = 0.0;
      for (std::int64_t k = 0; k < c; ++k) {
        y[k * plane + p] = std::exp(x[k * plane + p] - mx);
        total += y[k * plane + p];
      }
      for (std::int64_t k = 0; k < c; ++k) y[k * plane + p] /= total;
    }
  }
  Tensor out = finish(input.shape(), std::move(data), "softmax_channel");
  if (needs_grad({&input})) {
    record({input}, out, [out, n, c, plane](std::span<const double> g, std::span<std::vector<double>*> gi) {
      auto y = out.data();
      auto& dst = *gi[0];
      for (std::int64_t b = 0; b < n; ++b) {
        const auto base = b * c * plane;
        for (std::int64_t p = 0; p < plane; ++p) {
          double dot = 0.0;
          for (std::int64_t k = 0; k < c; ++k) dot += y[base + k * plane + p] * g[base + k * plane + p];
          for (std::int64_t k = 0; k < c; ++k) {
            const auto i = base + k * plane + p;
            dst[i] += y[i] * (g[i] - dot);
          }
        }
      }
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x, "sigmoid",
      [](double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(
      x, "tanh", [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

namespace {

// Reports one bit per element, e.g. the side of a kink each input lies on.
template <typename Pred>
void report_branches(const Tensor& x, Pred pred) {
  auto* monitor = BranchMonitor::active();
  if (monitor == nullptr) return;
  std::uint64_t word = 0;
  int bits = 0;
  for (double v : x.data()) {
    word = (word << 1) | (pred(v) ? 1u : 0u);
    if (++bits == 64) {
      monitor->mix(word);
      word = 0;
      bits = 0;
    }
  }
  monitor->mix(word);
}

}  // namespace

Tensor exp(const Tensor& x) {
  report_branches(x, [](double v) { return v > kExpInputMax; });
  return unary(
      x, "exp", [](double v) { return std::exp(std::min(v, kExpInputMax)); },
      [](double v, double y) { return v > kExpInputMax ? 0.0 : y; });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  report_branches(x, [](double v) { return v > 0; });
  return unary(
      x, "leaky_relu", [slope](double v) { return v > 0 ? v : slope * v; },
      [slope](double v, double) { return v > 0 ? 1.0 : slope; });
}

Tensor softplus(const Tensor& x) {
  return unary(
      x, "softplus", [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
      [](double v, double) {
        return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      });
}

Tensor abs(const Tensor& x) {
  report_branches(x, [](double v) { return v > 0; });
  return unary(
      x, "abs", [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

Tensor square(const Tensor& x) {
  return unary(
      x, "square", [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

namespace {

// Elementwise binary op. `da(a, b)` and `db(a, b)` are the partial derivatives.
template <typename F, typename DA, typename DB>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, F f, DA da, DB db) {
  require_same_shape(a, b, name);
  auto sa = a.data();
  auto sb = b.data();
  auto data = buffer(a);
  const auto n = a.numel();
#pragma omp parallel for simd schedule(static) if (n > kParallelThreshold)
  for (std::int64_t i = 0; i < n; ++i) data[i] = f(sa[i], sb[i]);
  Tensor out = finish(a.shape(), std::move(data), name);
  if (needs_grad({&a, &b})) {
    record({a, b}, out, [a, b, da, db](std::span<const double> g, std::span<std::vector<double>*> gi) {
      auto xa = a.data();
      auto xb = b.data();
      if (gi[0]) {
        auto& dst = *gi[0];
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i] * da(xa[i], xb[i]);
      }
      if (gi[1]) {
        auto& dst = *gi[1];
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i] * db(xa[i], xb[i]);
      }
    });
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; }, [](double x, double y) { return -x / (y * y); });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      x, "scale", [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double value) {
  return unary(
      x, "add_scalar", [value](double v) { return v + value; }, [](double, double) { return 1.0; });
}

Tensor one_minus(const Tensor& x) {
  return unary(
      x, "one_minus", [](double v) { return 1.0 - v; }, [](double, double) { return -1.0; });
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_channels: no inputs");
  for (const auto& p : parts) require_rank4(p, "concat_channels");
  const auto n = parts[0].n(), h = parts[0].h(), w = parts[0].w();
  std::int64_t channels = 0;
  for (const auto& p : parts) {
    if (p.n() != n || p.h() != h || p.w() != w) {
      throw DimensionError("concat_channels: mismatched N/H/W " + shape_str(parts[0].shape()) +
                           " vs " + shape_str(p.shape()));
    }
    channels += p.c();
  }
  const auto plane = h * w;
  std::vector<double> data(static_cast<std::size_t>(n * channels * plane));
  std::vector<std::int64_t> offsets;
  std::int64_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    auto src = p.data();
    for (std::int64_t b = 0; b < n; ++b) {
      std::copy_n(src.data() + b * p.c() * plane, p.c() * plane,
                  data.data() + (b * channels + off) * plane);
    }
    off += p.c();
  }
  Tensor out({n, channels, h, w}, std::move(data));
  bool any = false;
  for (const auto& p : parts) any = any || p.requires_grad();
  if (any && GradTape::active() != nullptr) {
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    std::vector<std::int64_t> counts;
    for (const auto& p : parts) counts.push_back(p.c());
    record(inputs, out, [offsets, counts, n, channels, plane](std::span<const double> g,
                                                             std::span<std::vector<double>*> gi) {
      for (std::size_t k = 0; k < gi.size(); ++k) {
        if (!gi[k]) continue;
        auto& dst = *gi[k];
        for (std::int64_t b = 0; b < n; ++b) {
          const double* src = g.data() + (b * channels + offsets[k]) * plane;
          double* d = dst.data() + b * counts[k] * plane;
          for (std::int64_t i = 0; i < counts[k] * plane; ++i) d[i] += src[i];
        }
      }
    });
  }
  return out;
}

std::vector<Tensor> split_channels(const Tensor& input, std::span<const std::int64_t> counts) {
  require_rank4(input, "split_channels");
  const auto total = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
  if (total != input.c()) {
    throw DimensionError("split_channels: counts sum to " + std::to_string(total) + ", input has " +
                         std::to_string(input.c()) + " channels");
  }
  const auto n = input.n(), channels = input.c(), plane = input.h() * input.w();
  auto src = input.data();
  std::vector<Tensor> outs;
  std::int64_t off = 0;
  for (auto cnt : counts) {
    if (cnt < 1) throw DimensionError("split_channels: counts must be positive");
    std::vector<double> data(static_cast<std::size_t>(n * cnt * plane));
    for (std::int64_t b = 0; b < n; ++b) {
      std::copy_n(src.data() + (b * channels + off) * plane, cnt * plane,
                  data.data() + b * cnt * plane);
    }
    Tensor out({n, cnt, input.h(), input.w()}, std::move(data));
    if (needs_grad({&input})) {
      record({input}, out, [off, cnt, n, channels, plane](std::span<const double> g,
                                                          std::span<std::vector<double>*> gi) {
        auto& dst = *gi[0];
        for (std::int64_t b = 0; b < n; ++b) {
          const double* s = g.data() + b * cnt * plane;
          double* d = dst.data() + (b * channels + off) * plane;
          for (std::int64_t i = 0; i < cnt * plane; ++i) d[i] += s[i];
        }
      });
    }
    outs.push_back(std::move(out));
    off += cnt;
  }
  return outs;
}

Tensor sample_bilinear_at(const Tensor& input, const Tensor& coords) {
  require_rank4(input, "sample_bilinear_at");
  require_rank4(coords, "sample_bilinear_at coords");
  if (coords.n() != input.n() || coords.c() != 2) {
    throw DimensionError("sample_bilinear_at: coords must be N x 2 x Ho x Wo, got " +
                         shape_str(coords.shape()));
  }
  check_finite(coords, "sample_bilinear_at coords");
  const auto n = input.n(), c = input.c(), in_h = input.h(), in_w = input.w();
  const auto out_h = coords.h(), out_w = coords.w();
  if (auto* monitor = BranchMonitor::active()) {
    // Cell index per coordinate; the border clamps show up as the extreme cells.
    const auto plane = out_h * out_w;
    auto cd = coords.data();
    for (std::int64_t i = 0; i < n * 2 * plane; ++i) {
      const double extent = static_cast<double>(((i / plane) % 2 == 0 ? in_h : in_w) - 1);
      const double v = cd[static_cast<std::size_t>(i)];
      const double cell = v <= 0.0 ? -1.0 : (v >= extent ? extent : std::floor(v));
      monitor->mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(cell)));
    }
  }
  std::vector<double> data(static_cast<std::size_t>(n * c * out_h * out_w));
  kernels::sample_bilinear_forward(input.data(), coords.data(), n, c, in_h, in_w, out_h, out_w, data);
  Tensor out = finish({n, c, out_h, out_w}, std::move(data), "sample_bilinear_at");
  if (needs_grad({&input, &coords})) {
    record({input, coords}, out,
           [input, coords, n, c, in_h, in_w, out_h, out_w](std::span<const double> g,
                                                           std::span<std::vector<double>*> gi) {
             kernels::sample_bilinear_backward(input.data(), coords.data(), g, n, c, in_h, in_w,
                                               out_h, out_w, gi[0] ? gi[0]->data() : nullptr,
                                               gi[1] ? gi[1]->data() : nullptr);
           });
  }
  return out;
}

Tensor sum_pool(const Tensor& input, std::int64_t k) {
  require_rank4(input, "sum_pool");
  if (k < 1) throw DimensionError("sum_pool: window must be >= 1");
  if (input.h() % k != 0 || input.w() % k != 0) {
    throw DimensionError("sum_pool: " + shape_str(input.shape()) + " not divisible by window " +
                         std::to_string(k));
  }
  const auto planes = input.n() * input.c(), in_h = input.h(), in_w = input.w();
  std::vector<double> data(static_cast<std::size_t>(planes * (in_h / k) * (in_w / k)));
  kernels::sum_pool_forward(input.data(), planes, in_h, in_w, k, data);
  Tensor out = finish({input.n(), input.c(), in_h / k, in_w / k}, std::move(data), "sum_pool");
  if (needs_grad({&input})) {
    record({input}, out, [planes, in_h, in_w, k](std::span<const double> g, std::span<std::vector<double>*> gi) {
      kernels::sum_pool_backward(g, planes, in_h, in_w, k, *gi[0]);
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  auto src = x.data();
  const double total = std::accumulate(src.begin(), src.end(), 0.0);
  Tensor out = finish({1}, {total}, "sum");
  if (needs_grad({&x})) {
    record({x}, out, [](std::span<const double> g, std::span<std::vector<double>*> gi) {
      for (auto& v : *gi[0]) v += g[0];
    });
  }
  return out;
}

Tensor sum_channels(const Tensor& x) {
  require_rank4(x, "sum_channels");
  const auto n = x.n(), c = x.c(), plane = x.h() * x.w();
  auto src = x.data();
  std::vector<double> data(static_cast<std::size_t>(n * plane), 0.0);
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t k = 0; k < c; ++k) {
      const double* s = src.data() + (b * c + k) * plane;
      double* d = data.data() + b * plane;
      for (std::int64_t i = 0; i < plane; ++i) d[i] += s[i];
    }
  }
  Tensor out = finish({n, 1, x.h(), x.w()}, std::move(data), "sum_channels");
  if (needs_grad({&x})) {
    record({x}, out, [n, c, plane](std::span<const double> g, std::span<std::vector<double>*> gi) {
      auto& dst = *gi[0];
      for (std::int64_t b = 0; b < n; ++b) {
        for (std::int64_t k = 0; k < c; ++k) {
          for (std::int64_t i = 0; i < plane; ++i) dst[(b * c + k) * plane + i] += g[b * plane + i];
        }
      }
    });
  }
  return out;
}

Tensor repeat_channels(const Tensor& x, std::int64_t channels) {
  require_rank4(x, "repeat_channels");
  if (x.c() != 1) throw DimensionError("repeat_channels: input must have one channel");
  if (channels < 1) throw DimensionError("repeat_channels: channels must be >= 1");
  const auto n = x.n(), plane = x.h() * x.w();
  auto src = x.data();
  std::vector<double> data(static_cast<std::size_t>(n * channels * plane));
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t k = 0; k < channels; ++k) {
      std::copy_n(src.data() + b * plane, plane, data.data() + (b * channels + k) * plane);
    }
  }
  Tensor out({n, channels, x.h(), x.w()}, std::move(data));
  if (needs_grad({&x})) {
    record({x}, out, [n, channels, plane](std::span<const double> g, std::span<std::vector<double>*> gi) {
      auto& dst = *gi[0];
      for (std::int64_t b = 0; b < n; ++b) {
        for (std::int64_t k = 0; k < channels; ++k) {
          for (std::int64_t i = 0; i < plane; ++i) dst[b * plane + i] += g[(b * channels + k) * plane + i];
        }
      }
    });
  }
  return out;
}

}  // namespace lpnet::ops
