#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "lpnet/layers.hpp"
#include "lpnet/metrics.hpp"
#include "lpnet/sdf.hpp"
#include "lpnet/sparse_depth.hpp"
#include "lpnet/tensor.hpp"

namespace lpnet::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = dist(rng);
  return Tensor(std::move(shape), std::move(v));
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(da[i] - db[i]));
  return m;
}

inline bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  auto da = a.data();
  auto db = b.data();
  return std::equal(da.begin(), da.end(), db.begin());
}

// Owning copy, safe to iterate over a temporary tensor.
inline std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

// Direct nested-sum convolution, zero padding.
inline Tensor conv_oracle(const Tensor& x, const Tensor& w, const Tensor& b, std::int64_t stride,
                          std::int64_t pad) {
  const auto n = x.n(), cin = x.c(), h = x.h(), wd = x.w();
  const auto cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const auto oh = (h + 2 * pad - kh) / stride + 1, ow = (wd + 2 * pad - kw) / stride + 1;
  std::vector<double> out(static_cast<std::size_t>(n * cout * oh * ow));
  auto wv = w.data();
  for (std::int64_t bi = 0; bi < n; ++bi)
    for (std::int64_t o = 0; o < cout; ++o)
      for (std::int64_t y = 0; y < oh; ++y)
        for (std::int64_t xx = 0; xx < ow; ++xx) {
          double s = b.defined() ? b.data()[static_cast<std::size_t>(o)] : 0.0;
          for (std::int64_t ci = 0; ci < cin; ++ci)
            for (std::int64_t ky = 0; ky < kh; ++ky)
              for (std::int64_t kx = 0; kx < kw; ++kx) {
                const auto iy = y * stride - pad + ky, ix = xx * stride - pad + kx;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                s += x.at(bi, ci, iy, ix) * wv[static_cast<std::size_t>(((o * cin + ci) * kh + ky) * kw + kx)];
              }
          out[static_cast<std::size_t>(((bi * cout + o) * oh + y) * ow + xx)] = s;
        }
  return Tensor({n, cout, oh, ow}, std::move(out));
}

// Bilinear read with clamp-to-edge, written from the four-neighbour definition.
inline double bilinear_read(const Tensor& t, std::int64_t n, std::int64_t c, double y, double x) {
  const double ymax = static_cast<double>(t.h() - 1), xmax = static_cast<double>(t.w() - 1);
  y = std::min(std::max(y, 0.0), ymax);
  x = std::min(std::max(x, 0.0), xmax);
  const auto y0 = static_cast<std::int64_t>(std::floor(y)), x0 = static_cast<std::int64_t>(std::floor(x));
  const auto y1 = std::min(y0 + 1, t.h() - 1), x1 = std::min(x0 + 1, t.w() - 1);
  const double wy = y - static_cast<double>(y0), wx = x - static_cast<double>(x0);
  return (1 - wy) * (1 - wx) * t.at(n, c, y0, x0) + (1 - wy) * wx * t.at(n, c, y0, x1) +
         wy * (1 - wx) * t.at(n, c, y1, x0) + wy * wx * t.at(n, c, y1, x1);
}

inline Tensor concat_oracle(const Tensor& a, const Tensor& b) {
  std::vector<double> v;
  for (std::int64_t n = 0; n < a.n(); ++n) {
    for (std::int64_t c = 0; c < a.c(); ++c)
      for (std::int64_t y = 0; y < a.h(); ++y)
        for (std::int64_t x = 0; x < a.w(); ++x) v.push_back(a.at(n, c, y, x));
    for (std::int64_t c = 0; c < b.c(); ++c)
      for (std::int64_t y = 0; y < b.h(); ++y)
        for (std::int64_t x = 0; x < b.w(); ++x) v.push_back(b.at(n, c, y, x));
  }
  return Tensor({a.n(), a.c() + b.c(), a.h(), a.w()}, std::move(v));
}

inline Tensor random_sparse_depth(std::int64_t h, std::int64_t w, double density, std::mt19937_64& rng,
                                  double lo = 0.5, double hi = 10.0) {
  std::bernoulli_distribution keep(density);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(static_cast<std::size_t>(h * w), 0.0);
  for (auto& x : v) {
    if (keep(rng)) x = dist(rng);
  }
  return Tensor({1, 1, h, w}, std::move(v));
}

// Per-patch scalar loop over exp(conv(cat(depth, mask))).
inline Tensor pool_oracle(const SparseDepth& s, int level, const Conv2d& conv) {
  const Tensor logits = conv_oracle(concat_oracle(s.depth, s.mask), conv.weight, conv.bias, 1, 1);
  const std::int64_t k = std::int64_t{1} << level;
  const auto oh = s.depth.h() / k, ow = s.depth.w() / k;
  std::vector<double> out;
  for (std::int64_t py = 0; py < oh; ++py)
    for (std::int64_t px = 0; px < ow; ++px) {
      double num = 0.0, den = 0.0;
      for (std::int64_t y = py * k; y < (py + 1) * k; ++y)
        for (std::int64_t x = px * k; x < (px + 1) * k; ++x) {
          const double w = std::exp(std::min(logits.at(0, 0, y, x), 40.0));
          num += w * s.depth.at(0, 0, y, x);
          den += w * s.mask.at(0, 0, y, x);
        }
      out.push_back(num / (den + 1e-8));
    }
  return Tensor({1, 1, oh, ow}, std::move(out));
}

// sum_j w_j(p) * depth(p + g_j + o_j(p)), every read independent.
inline Tensor deformable_oracle(const Tensor& depth, const Tensor& weights, const Tensor& offsets, int k) {
  std::vector<double> out;
  for (std::int64_t n = 0; n < depth.n(); ++n)
    for (std::int64_t y = 0; y < depth.h(); ++y)
      for (std::int64_t x = 0; x < depth.w(); ++x) {
        double s = 0.0;
        for (int j = 0; j < k * k; ++j) {
          const double sy = static_cast<double>(y + j / k - k / 2) + offsets.at(n, 2 * j, y, x);
          const double sx = static_cast<double>(x + j % k - k / 2) + offsets.at(n, 2 * j + 1, y, x);
          s += weights.at(n, j, y, x) * bilinear_read(depth, n, 0, sy, sx);
        }
        out.push_back(s);
      }
  return Tensor({depth.n(), 1, depth.h(), depth.w()}, std::move(out));
}

struct FieldOracle {
  Tensor weights;
  Tensor offsets;
};

// Kernel field from the head's convs, softmax or tanh-minus-mean per pixel.
inline FieldOracle kernel_field_oracle(const Tensor& depth, const Tensor& f_dec, const FilterHead& head,
                                       int k, FilterKind kind) {
  const Tensor feat = concat_oracle(depth, f_dec);
  const Tensor logits = conv_oracle(feat, head.weight_conv.weight, head.weight_conv.bias, 1, 1);
  const Tensor raw = conv_oracle(feat, head.offset_conv.weight, head.offset_conv.bias, 1, 1);
  const auto n = depth.n(), h = depth.h(), w = depth.w();
  const int taps = k * k;
  std::vector<double> wv(static_cast<std::size_t>(n * taps * h * w));
  std::vector<double> ov(static_cast<std::size_t>(n * 2 * taps * h * w), 0.0);
  auto widx = [&](std::int64_t b, std::int64_t c, std::int64_t y, std::int64_t x) {
    return static_cast<std::size_t>(((b * taps + c) * h + y) * w + x);
  };
  auto oidx = [&](std::int64_t b, std::int64_t c, std::int64_t y, std::int64_t x) {
    return static_cast<std::size_t>(((b * 2 * taps + c) * h + y) * w + x);
  };
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x) {
        std::vector<double> l(static_cast<std::size_t>(taps));
        for (int j = 0; j < taps; ++j) l[static_cast<std::size_t>(j)] = logits.at(b, j, y, x);
        if (kind == FilterKind::kSmoothness) {
          const double mx = *std::max_element(l.begin(), l.end());
          double z = 0.0;
          for (double v : l) z += std::exp(v - mx);
          for (int j = 0; j < taps; ++j) wv[widx(b, j, y, x)] = std::exp(l[static_cast<std::size_t>(j)] - mx) / z;
        } else {
          double mean = 0.0;
          for (double v : l) mean += std::tanh(v) / taps;
          for (int j = 0; j < taps; ++j) wv[widx(b, j, y, x)] = std::tanh(l[static_cast<std::size_t>(j)]) - mean;
        }
        int r = 0;
        for (int j = 0; j < taps; ++j) {
          if (j == taps / 2) continue;
          ov[oidx(b, 2 * j, y, x)] = raw.at(b, 2 * r, y, x);
          ov[oidx(b, 2 * j + 1, y, x)] = raw.at(b, 2 * r + 1, y, x);
          ++r;
        }
      }
  return {Tensor({n, taps, h, w}, std::move(wv)), Tensor({n, 2 * taps, h, w}, std::move(ov))};
}

// Smoothing, sharpening on top of it, then the sigmoid-attention blend.
inline Tensor sdf_oracle(const Tensor& depth, const Tensor& f_dec, const SDFParams& p) {
  const int k = p.kernel;
  const auto sm = kernel_field_oracle(depth, f_dec, p.smooth, k, FilterKind::kSmoothness);
  const auto sh = kernel_field_oracle(depth, f_dec, p.sharp, k, FilterKind::kSharpness);
  const Tensor d_m = deformable_oracle(depth, sm.weights, sm.offsets, k);
  const Tensor resp = deformable_oracle(d_m, sh.weights, sh.offsets, k);
  std::vector<double> av(static_cast<std::size_t>(depth.numel()));
  for (std::size_t i = 0; i < av.size(); ++i) av[i] = d_m.data()[i] + resp.data()[i];
  const Tensor d_a(depth.shape(), std::move(av));
  const Tensor logit = conv_oracle(concat_oracle(concat_oracle(f_dec, d_m), d_a), p.attention.weight,
                                   p.attention.bias, 1, 1);
  std::vector<double> out(static_cast<std::size_t>(depth.numel()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double a = 1.0 / (1.0 + std::exp(-logit.data()[i]));
    out[i] = a * d_m.data()[i] + (1.0 - a) * d_a.data()[i];
  }
  return Tensor(depth.shape(), std::move(out));
}

struct MetricOracle {
  double rmse_mm, mae_mm, irmse_per_km, imae_per_km, rel, delta1, delta2, delta3;
};

inline MetricOracle metric_oracle(const Tensor& pred, const SparseDepth& gt) {
  std::vector<double> err, ierr, ratio, rel;
  for (std::int64_t i = 0; i < pred.numel(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (gt.mask.data()[k] != 1.0) continue;
    const double g = gt.depth.data()[k];
    const double p = pred.data()[k] < 0.0 ? 0.0 : pred.data()[k];
    const double pc = pred.data()[k] < 1e-3 ? 1e-3 : pred.data()[k];
    err.push_back(p - g);
    ierr.push_back(1.0 / pc - 1.0 / g);
    rel.push_back(std::abs(p - g) / g);
    ratio.push_back(pc > g ? pc / g : g / pc);
  }
  const double n = static_cast<double>(err.size());
  auto mean = [&](auto f, const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += f(x);
    return s / n;
  };
  auto sq = [](double x) { return x * x; };
  auto ab = [](double x) { return std::abs(x); };
  auto id = [](double x) { return x; };
  auto frac = [&](double t) {
    double c = 0;
    for (double r : ratio) c += r < t ? 1.0 : 0.0;
    return 100.0 * c / n;
  };
  return {std::sqrt(mean(sq, err)) * 1000.0, mean(ab, err) * 1000.0, std::sqrt(mean(sq, ierr)) * 1000.0,
          mean(ab, ierr) * 1000.0, mean(id, rel), frac(1.25), frac(1.25 * 1.25), frac(1.25 * 1.25 * 1.25)};
}

}  // namespace lpnet::testing
