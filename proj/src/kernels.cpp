#include "lpnet/kernels.hpp"

// Parallelism comes from the column panels below; Eigen's own threading would
// make the blocking, and so the rounding, depend on the thread count.
#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <vector>

#include "lpnet/errors.hpp"

namespace lpnet {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMajor>;

ConvGeometry make_conv_geometry(std::int64_t in_c, std::int64_t in_h, std::int64_t in_w,
                                std::int64_t out_c, std::int64_t kh, std::int64_t kw,
                                std::int64_t stride, std::int64_t pad) {
  if (stride < 1) throw DimensionError("conv stride must be >= 1");
  if (pad < 0) throw DimensionError("conv padding must be >= 0");
  ConvGeometry g;
  g.in_c = in_c;
  g.in_h = in_h;
  g.in_w = in_w;
  g.out_c = out_c;
  g.kh = kh;
  g.kw = kw;
  g.stride = stride;
  g.pad = pad;
  const auto span_h = in_h + 2 * pad - kh;
  const auto span_w = in_w + 2 * pad - kw;
  if (span_h < 0 || span_w < 0) throw DimensionError("conv kernel larger than padded input");
  g.out_h = span_h / stride + 1;
  g.out_w = span_w / stride + 1;
  return g;
}

namespace {

// a + t (b - a): reproduces a exactly when a == b, so constants survive
// interpolation bit for bit.
inline double lerp(double a, double b, double t) { return a + t * (b - a); }

// Bilinear source taps for one axis under the half-pixel (align-corners-false) mapping.
struct AxisTaps {
  std::vector<std::int64_t> lo, hi;
  std::vector<double> frac;
};

AxisTaps resize_taps(std::int64_t in, std::int64_t out) {
  AxisTaps t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::int64_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::int64_t>(std::floor(src));
    t.lo[i] = lo;
    t.hi[i] = std::min(lo + 1, in - 1);
    t.frac[i] = src - static_cast<double>(lo);
  }
  return t;
}

// Output columns per GEMM panel. Fixed, so the summation order never depends
// on how panels are spread over threads.
constexpr std::int64_t kPanel = 128;

/// dst (m x n) = or += op(A) * op(B), all row-major. op(A) is m x k; a_trans
/// means `a` holds A^T (k x m). op(B) is k x n; b_trans means `b` holds B^T.
///
/// Eigen selects vectorized paths from operand alignment, so products over
/// raw tensor memory could round differently depending on where the
/// allocator placed it. Operands are copied into Eigen-owned storage first.
void gemm(const double* a, bool a_trans, const double* b, bool b_trans, std::int64_t m,
          std::int64_t k, std::int64_t n, double* dst, bool accumulate) {
  const RowMajor lhs = a_trans ? RowMajor(ConstMatMap(a, k, m).transpose()) : RowMajor(ConstMatMap(a, m, k));
  const auto panels = (n + kPanel - 1) / kPanel;
#pragma omp parallel for schedule(static) if (m * k * n > 262144)
  for (std::int64_t panel = 0; panel < panels; ++panel) {
    const auto c0 = panel * kPanel;
    const auto width = std::min(kPanel, n - c0);
    const RowMajor rhs = b_trans ? RowMajor(ConstMatMap(b + c0 * k, width, k).transpose())
                                 : RowMajor(ConstMatMap(b, k, n).middleCols(c0, width));
    RowMajor prod(m, width);
    prod.noalias() = lhs * rhs;
    for (std::int64_t i = 0; i < m; ++i) {
      double* row = dst + i * n + c0;
      const double* src = prod.data() + i * width;
      if (accumulate) {
        for (std::int64_t j = 0; j < width; ++j) row[j] += src[j];
      } else {
        std::copy(src, src + width, row);
      }
    }
  }
}

}  // namespace

namespace kernels {

void im2col(const double* image, const ConvGeometry& g, double* col) {
  const auto rows = g.col_rows();
  const auto plane = g.out_h * g.out_w;
#pragma omp parallel for schedule(static) if (rows * plane > 16384)
  for (std::int64_t row = 0; row < rows; ++row) {
    const auto c = row / (g.kh * g.kw);
    const auto ki = (row / g.kw) % g.kh;
    const auto kj = row % g.kw;
    const double* src = image + c * g.in_h * g.in_w;
    double* dst = col + row * plane;
    for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
      const auto iy = oy * g.stride - g.pad + ki;
      double* out_row = dst + oy * g.out_w;
      if (iy < 0 || iy >= g.in_h) {
        std::fill(out_row, out_row + g.out_w, 0.0);
        continue;
      }
      const double* in_row = src + iy * g.in_w;
      for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
        const auto ix = ox * g.stride - g.pad + kj;
        out_row[ox] = (ix >= 0 && ix < g.in_w) ? in_row[ix] : 0.0;
      }
    }
  }
}

void col2im_add(const double* col, const ConvGeometry& g, double* image) {
  const auto plane = g.out_h * g.out_w;
  // Each input channel owns a disjoint slice of `image`, so channels run in parallel.
#pragma omp parallel for schedule(static) if (g.in_c * g.kh * g.kw * plane > 16384)
  for (std::int64_t c = 0; c < g.in_c; ++c) {
    double* dst = image + c * g.in_h * g.in_w;
    for (std::int64_t ki = 0; ki < g.kh; ++ki) {
      for (std::int64_t kj = 0; kj < g.kw; ++kj) {
        const double* src = col + ((c * g.kh + ki) * g.kw + kj) * plane;
        for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = oy * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.in_h) continue;
          double* img_row = dst + iy * g.in_w;
          const double* col_row = src + oy * g.out_w;
          for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = ox * g.stride - g.pad + kj;
            if (ix >= 0 && ix < g.in_w) img_row[ix] += col_row[ox];
          }
        }
      }
    }
  }
}

void conv2d_forward(std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::int64_t batch, const ConvGeometry& g,
                    std::span<double> output) {
  const auto k = g.col_rows();
  const auto p = g.col_cols();
  const auto in_size = g.in_c * g.in_h * g.in_w;
  std::vector<double> col(g.is_pointwise() ? 0 : static_cast<std::size_t>(k * p));
  for (std::int64_t n = 0; n < batch; ++n) {
    const double* x = input.data() + n * in_size;
    const double* col_ptr = x;
    if (!g.is_pointwise()) {
      im2col(x, g, col.data());
      col_ptr = col.data();
    }
    double* out = output.data() + n * g.out_c * p;
    gemm(weight.data(), false, col_ptr, false, g.out_c, k, p, out, false);
    if (!bias.empty()) {
      for (std::int64_t oc = 0; oc < g.out_c; ++oc) {
        for (std::int64_t i = 0; i < p; ++i) out[oc * p + i] += bias[oc];
      }
    }
  }
}

void conv2d_backward(std::span<const double> input, std::span<const double> weight,
                     std::span<const double> grad_out, std::int64_t batch, const ConvGeometry& g,
                     double* grad_input, double* grad_weight, double* grad_bias) {
  const auto k = g.col_rows();
  const auto p = g.col_cols();
  const auto in_size = g.in_c * g.in_h * g.in_w;
  std::vector<double> col(static_cast<std::size_t>(k * p));
  for (std::int64_t n = 0; n < batch; ++n) {
    const double* gout = grad_out.data() + n * g.out_c * p;
    if (grad_bias != nullptr) {
      for (std::int64_t oc = 0; oc < g.out_c; ++oc) {
        double s = 0.0;
        for (std::int64_t i = 0; i < p; ++i) s += gout[oc * p + i];
        grad_bias[oc] += s;
      }
    }
    if (grad_weight != nullptr) {
      const double* x = input.data() + n * in_size;
      const double* col_ptr = x;
      if (!g.is_pointwise()) {
        im2col(x, g, col.data());
        col_ptr = col.data();
      }
      gemm(gout, false, col_ptr, true, g.out_c, p, k, grad_weight, true);
    }
    if (grad_input != nullptr) {
      double* gx = grad_input + n * in_size;
      if (g.is_pointwise()) {
        gemm(weight.data(), true, gout, false, k, g.out_c, p, gx, true);
      } else {
        gemm(weight.data(), true, gout, false, k, g.out_c, p, col.data(), false);
        col2im_add(col.data(), g, gx);
      }
    }
  }
}

void conv2d_transpose_forward(std::span<const double> input, std::span<const double> weight,
                              std::span<const double> bias, std::int64_t batch,
                              const ConvGeometry& g, std::span<double> output) {
  const auto k = g.col_rows();
  const auto p = g.col_cols();
  const auto out_size = g.in_c * g.in_h * g.in_w;
  std::vector<double> col(static_cast<std::size_t>(k * p));
  std::fill(output.begin(), output.end(), 0.0);
  for (std::int64_t n = 0; n < batch; ++n) {
    gemm(weight.data(), true, input.data() + n * g.out_c * p, false, k, g.out_c, p, col.data(), false);
    double* out = output.data() + n * out_size;
    col2im_add(col.data(), g, out);
    if (!bias.empty()) {
      const auto plane = g.in_h * g.in_w;
      for (std::int64_t c = 0; c < g.in_c; ++c) {
        double* dst = out + c * plane;
        for (std::int64_t i = 0; i < plane; ++i) dst[i] += bias[c];
      }
    }
  }
}

void conv2d_transpose_backward(std::span<const double> input, std::span<const double> weight,
                               std::span<const double> grad_out, std::int64_t batch,
                               const ConvGeometry& g, double* grad_input, double* grad_weight,
                               double* grad_bias) {
  const auto k = g.col_rows();
  const auto p = g.col_cols();
  const auto out_size = g.in_c * g.in_h * g.in_w;
  const auto plane = g.in_h * g.in_w;
  std::vector<double> col(static_cast<std::size_t>(k * p));
  for (std::int64_t n = 0; n < batch; ++n) {
    const double* gout = grad_out.data() + n * out_size;
    if (grad_bias != nullptr) {
      for (std::int64_t c = 0; c < g.in_c; ++c) {
        double s = 0.0;
        for (std::int64_t i = 0; i < plane; ++i) s += gout[c * plane + i];
        grad_bias[c] += s;
      }
    }
    if (grad_input == nullptr && grad_weight == nullptr) continue;
    im2col(gout, g, col.data());
    if (grad_input != nullptr) {
      gemm(weight.data(), false, col.data(), false, g.out_c, k, p, grad_input + n * g.out_c * p, true);
    }
    if (grad_weight != nullptr) {
      gemm(input.data() + n * g.out_c * p, false, col.data(), true, g.out_c, p, k, grad_weight, true);
    }
  }
}

void bilinear_resize_forward(std::span<const double> input, std::int64_t planes, std::int64_t in_h,
                             std::int64_t in_w, std::int64_t out_h, std::int64_t out_w,
                             std::span<double> output) {
  const auto ty = resize_taps(in_h, out_h);
  const auto tx = resize_taps(in_w, out_w);
#pragma omp parallel for schedule(static) if (planes * out_h * out_w > 16384)
  for (std::int64_t pl = 0; pl < planes; ++pl) {
    const double* src = input.data() + pl * in_h * in_w;
    double* dst = output.data() + pl * out_h * out_w;
    for (std::int64_t y = 0; y < out_h; ++y) {
      const double* r0 = src + ty.lo[y] * in_w;
      const double* r1 = src + ty.hi[y] * in_w;
      const double fy = ty.frac[y];
      for (std::int64_t x = 0; x < out_w; ++x) {
        const double fx = tx.frac[x];
        const double top = lerp(r0[tx.lo[x]], r0[tx.hi[x]], fx);
        const double bot = lerp(r1[tx.lo[x]], r1[tx.hi[x]], fx);
        dst[y * out_w + x] = lerp(top, bot, fy);
      }
    }
  }
}

void bilinear_resize_backward(std::span<const double> grad_out, std::int64_t planes,
                              std::int64_t in_h, std::int64_t in_w, std::int64_t out_h,
                              std::int64_t out_w, std::span<double> grad_input) {
  const auto ty = resize_taps(in_h, out_h);
  const auto tx = resize_taps(in_w, out_w);
#pragma omp parallel for schedule(static) if (planes * out_h * out_w > 16384)
  for (std::int64_t pl = 0; pl < planes; ++pl) {
    const double* g = grad_out.data() + pl * out_h * out_w;
    double* dst = grad_input.data() + pl * in_h * in_w;
    for (std::int64_t y = 0; y < out_h; ++y) {
      double* r0 = dst + ty.lo[y] * in_w;
      double* r1 = dst + ty.hi[y] * in_w;
      const double fy = ty.frac[y];
      for (std::int64_t x = 0; x < out_w; ++x) {
        const double v = g[y * out_w + x];
        const double fx = tx.frac[x];
        r0[tx.lo[x]] += (1.0 - fy) * (1.0 - fx) * v;
        r0[tx.hi[x]] += (1.0 - fy) * fx * v;
        r1[tx.lo[x]] += fy * (1.0 - fx) * v;
        r1[tx.hi[x]] += fy * fx * v;
      }
    }
  }
}

namespace {

struct SampleTap {
  std::int64_t y0, y1, x0, x1;
  double fy, fx;
  bool y_inside, x_inside;
};

inline SampleTap sample_tap(double y, double x, std::int64_t h, std::int64_t w) {
  SampleTap t{};
  const double ymax = static_cast<double>(h - 1);
  const double xmax = static_cast<double>(w - 1);
  t.y_inside = y > 0.0 && y < ymax;
  t.x_inside = x > 0.0 && x < xmax;
  const double yc = std::clamp(y, 0.0, ymax);
  const double xc = std::clamp(x, 0.0, xmax);
  t.y0 = static_cast<std::int64_t>(std::floor(yc));
  t.x0 = static_cast<std::int64_t>(std::floor(xc));
  t.y1 = std::min(t.y0 + 1, h - 1);
  t.x1 = std::min(t.x0 + 1, w - 1);
  t.fy = yc - static_cast<double>(t.y0);
  t.fx = xc - static_cast<double>(t.x0);
  return t;
}

}  // namespace

void sample_bilinear_forward(std::span<const double> input, std::span<const double> coords,
                             std::int64_t batch, std::int64_t channels, std::int64_t in_h,
                             std::int64_t in_w, std::int64_t out_h, std::int64_t out_w,
                             std::span<double> output) {
  const auto plane_out = out_h * out_w;
#pragma omp parallel for schedule(static) if (batch * channels * plane_out > 16384)
  for (std::int64_t nc = 0; nc < batch * channels; ++nc) {
    const auto n = nc / channels;
    const double* src = input.data() + nc * in_h * in_w;
    const double* cy = coords.data() + n * 2 * plane_out;
    const double* cx = cy + plane_out;
    double* dst = output.data() + nc * plane_out;
    for (std::int64_t i = 0; i < plane_out; ++i) {
      const auto t = sample_tap(cy[i], cx[i], in_h, in_w);
      const double v00 = src[t.y0 * in_w + t.x0], v01 = src[t.y0 * in_w + t.x1];
      const double v10 = src[t.y1 * in_w + t.x0], v11 = src[t.y1 * in_w + t.x1];
      dst[i] = lerp(lerp(v00, v01, t.fx), lerp(v10, v11, t.fx), t.fy);
    }
  }
}

void sample_bilinear_backward(std::span<const double> input, std::span<const double> coords,
                              std::span<const double> grad_out, std::int64_t batch,
                              std::int64_t channels, std::int64_t in_h, std::int64_t in_w,
                              std::int64_t out_h, std::int64_t out_w, double* grad_input,
                              double* grad_coords) {
  const auto plane_out = out_h * out_w;
  // Coordinate gradients sum over channels, so parallelism is per sample.
#pragma omp parallel for schedule(static) if (batch > 1 && batch * channels * plane_out > 16384)
  for (std::int64_t n = 0; n < batch; ++n) {
    const double* cy = coords.data() + n * 2 * plane_out;
    const double* cx = cy + plane_out;
    for (std::int64_t c = 0; c < channels; ++c) {
      const auto nc = n * channels + c;
      const double* src = input.data() + nc * in_h * in_w;
      const double* g = grad_out.data() + nc * plane_out;
      for (std::int64_t i = 0; i < plane_out; ++i) {
        const auto t = sample_tap(cy[i], cx[i], in_h, in_w);
        const double gv = g[i];
        if (grad_input != nullptr) {
          double* dst = grad_input + nc * in_h * in_w;
          dst[t.y0 * in_w + t.x0] += (1.0 - t.fy) * (1.0 - t.fx) * gv;
          dst[t.y0 * in_w + t.x1] += (1.0 - t.fy) * t.fx * gv;
          dst[t.y1 * in_w + t.x0] += t.fy * (1.0 - t.fx) * gv;
          dst[t.y1 * in_w + t.x1] += t.fy * t.fx * gv;
        }
        if (grad_coords != nullptr) {
          const double v00 = src[t.y0 * in_w + t.x0], v01 = src[t.y0 * in_w + t.x1];
          const double v10 = src[t.y1 * in_w + t.x0], v11 = src[t.y1 * in_w + t.x1];
          double* gy = grad_coords + n * 2 * plane_out;
          double* gx = gy + plane_out;
          if (t.y_inside) gy[i] += gv * ((1.0 - t.fx) * (v10 - v00) + t.fx * (v11 - v01));
          if (t.x_inside) gx[i] += gv * ((1.0 - t.fy) * (v01 - v00) + t.fy * (v11 - v10));
        }
      }
    }
  }
}

void sum_pool_forward(std::span<const double> input, std::int64_t planes, std::int64_t in_h,
                      std::int64_t in_w, std::int64_t k, std::span<double> output) {
  const auto out_h = in_h / k;
  const auto out_w = in_w / k;
#pragma omp parallel for schedule(static) if (planes * in_h * in_w > 16384)
  for (std::int64_t pl = 0; pl < planes; ++pl) {
    const double* src = input.data() + pl * in_h * in_w;
    double* dst = output.data() + pl * out_h * out_w;
    for (std::int64_t oy = 0; oy < out_h; ++oy) {
      for (std::int64_t ox = 0; ox < out_w; ++ox) {
        const double* win = src + oy * k * in_w + ox * k;
        double acc = 0.0;
        for (std::int64_t dy = 0; dy < k; ++dy) {
          for (std::int64_t dx = 0; dx < k; ++dx) acc += win[dy * in_w + dx];
        }
        dst[oy * out_w + ox] = acc;
      }
    }
  }
}

void sum_pool_backward(std::span<const double> grad_out, std::int64_t planes, std::int64_t in_h,
                       std::int64_t in_w, std::int64_t k, std::span<double> grad_input) {
  const auto out_h = in_h / k;
  const auto out_w = in_w / k;
#pragma omp parallel for schedule(static) if (planes * in_h * in_w > 16384)
  for (std::int64_t pl = 0; pl < planes; ++pl) {
    const double* g = grad_out.data() + pl * out_h * out_w;
    double* dst = grad_input.data() + pl * in_h * in_w;
    for (std::int64_t y = 0; y < in_h; ++y) {
      const double* row = g + (y / k) * out_w;
      for (std::int64_t x = 0; x < in_w; ++x) dst[y * in_w + x] += row[x / k];
    }
  }
}

}  // namespace kernels

namespace reference {

void conv2d_forward(std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::int64_t batch, const ConvGeometry& g,
                    std::span<double> output) {
  for (std::int64_t n = 0; n < batch; ++n) {
    for (std::int64_t oc = 0; oc < g.out_c; ++oc) {
      for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
        for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
          double acc = bias.empty() ? 0.0 : bias[oc];
          for (std::int64_t ic = 0; ic < g.in_c; ++ic) {
            for (std::int64_t ki = 0; ki < g.kh; ++ki) {
              for (std::int64_t kj = 0; kj < g.kw; ++kj) {
                const auto iy = oy * g.stride - g.pad + ki;
                const auto ix = ox * g.stride - g.pad + kj;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                acc += weight[((oc * g.in_c + ic) * g.kh + ki) * g.kw + kj] *
                       input[((n * g.in_c + ic) * g.in_h + iy) * g.in_w + ix];
              }
            }
          }
          output[((n * g.out_c + oc) * g.out_h + oy) * g.out_w + ox] = acc;
        }
      }
    }
  }
}

void conv2d_transpose_forward(std::span<const double> input, std::span<const double> weight,
                              std::span<const double> bias, std::int64_t batch,
                              const ConvGeometry& g, std::span<double> output) {
  // Scatter form: every input element spreads weight-scaled copies over its footprint.
  for (std::int64_t n = 0; n < batch; ++n) {
    for (std::int64_t c = 0; c < g.in_c; ++c) {
      for (std::int64_t i = 0; i < g.in_h * g.in_w; ++i) {
        output[(n * g.in_c + c) * g.in_h * g.in_w + i] = bias.empty() ? 0.0 : bias[c];
      }
    }
    for (std::int64_t ic = 0; ic < g.out_c; ++ic) {
      for (std::int64_t y = 0; y < g.out_h; ++y) {
        for (std::int64_t x = 0; x < g.out_w; ++x) {
          const double v = input[((n * g.out_c + ic) * g.out_h + y) * g.out_w + x];
          for (std::int64_t oc = 0; oc < g.in_c; ++oc) {
            for (std::int64_t ki = 0; ki < g.kh; ++ki) {
              for (std::int64_t kj = 0; kj < g.kw; ++kj) {
                const auto oy = y * g.stride - g.pad + ki;
                const auto ox = x * g.stride - g.pad + kj;
                if (oy < 0 || oy >= g.in_h || ox < 0 || ox >= g.in_w) continue;
                output[((n * g.in_c + oc) * g.in_h + oy) * g.in_w + ox] +=
                    v * weight[((ic * g.in_c + oc) * g.kh + ki) * g.kw + kj];
              }
            }
          }
        }
      }
    }
  }
}

void bilinear_resize_forward(std::span<const double> input, std::int64_t planes, std::int64_t in_h,
                             std::int64_t in_w, std::int64_t out_h, std::int64_t out_w,
                             std::span<double> output) {
  const double sy = static_cast<double>(in_h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(in_w) / static_cast<double>(out_w);
  for (std::int64_t pl = 0; pl < planes; ++pl) {
    for (std::int64_t y = 0; y < out_h; ++y) {
      for (std::int64_t x = 0; x < out_w; ++x) {
        const double src_y = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(in_h - 1));
        const double src_x = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(in_w - 1));
        const auto y0 = static_cast<std::int64_t>(std::floor(src_y));
        const auto x0 = static_cast<std::int64_t>(std::floor(src_x));
        const auto y1 = std::min(y0 + 1, in_h - 1);
        const auto x1 = std::min(x0 + 1, in_w - 1);
        const double fy = src_y - y0, fx = src_x - x0;
        const double* p = input.data() + pl * in_h * in_w;
        output[(pl * out_h + y) * out_w + x] =
            (1 - fy) * ((1 - fx) * p[y0 * in_w + x0] + fx * p[y0 * in_w + x1]) +
            fy * ((1 - fx) * p[y1 * in_w + x0] + fx * p[y1 * in_w + x1]);
      }
    }
  }
}

void sample_bilinear_forward(std::span<const double> input, std::span<const double> coords,
                             std::int64_t batch, std::int64_t channels, std::int64_t in_h,
                             std::int64_t in_w, std::int64_t out_h, std::int64_t out_w,
                             std::span<double> output) {
  const auto plane = out_h * out_w;
  for (std::int64_t n = 0; n < batch; ++n) {
    for (std::int64_t c = 0; c < channels; ++c) {
      for (std::int64_t i = 0; i < plane; ++i) {
        const double y = std::clamp(coords[n * 2 * plane + i], 0.0, static_cast<double>(in_h - 1));
        const double x =
            std::clamp(coords[n * 2 * plane + plane + i], 0.0, static_cast<double>(in_w - 1));
        const auto y0 = static_cast<std::int64_t>(std::floor(y));
        const auto x0 = static_cast<std::int64_t>(std::floor(x));
        const auto y1 = std::min(y0 + 1, in_h - 1);
        const auto x1 = std::min(x0 + 1, in_w - 1);
        const double fy = y - y0, fx = x - x0;
        const double* p = input.data() + (n * channels + c) * in_h * in_w;
        output[(n * channels + c) * plane + i] =
            (1 - fy) * ((1 - fx) * p[y0 * in_w + x0] + fx * p[y0 * in_w + x1]) +
            fy * ((1 - fx) * p[y1 * in_w + x0] + fx * p[y1 * in_w + x1]);
      }
    }
  }
}

void sum_pool_forward(std::span<const double> input, std::int64_t planes, std::int64_t in_h,
                      std::int64_t in_w, std::int64_t k, std::span<double> output) {
  const auto out_h = in_h / k;
  const auto out_w = in_w / k;
  for (std::int64_t pl = 0; pl < planes; ++pl) {
    for (std::int64_t oy = 0; oy < out_h; ++oy) {
      for (std::int64_t ox = 0; ox < out_w; ++ox) {
        double acc = 0.0;
        for (std::int64_t dy = 0; dy < k; ++dy) {
          for (std::int64_t dx = 0; dx < k; ++dx) {
            acc += input[(pl * in_h + oy * k + dy) * in_w + ox * k + dx];
          }
        }
        output[(pl * out_h + oy) * out_w + ox] = acc;
      }
    }
  }
}

}  // namespace reference

}  // namespace lpnet
