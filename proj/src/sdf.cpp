#include "lpnet/sdf.hpp"

#include "lpnet/errors.hpp"
#include "lpnet/ops.hpp"

namespace lpnet {

namespace {

void check_kernel(int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw DimensionError("SDF kernel size must be odd and >= 1");
}

// N x 2 x H x W absolute (row, col) of tap (ty, tx) around every pixel.
Tensor grid_coords(std::int64_t n, std::int64_t h, std::int64_t w, std::int64_t dy, std::int64_t dx) {
  std::vector<double> data(static_cast<std::size_t>(n * 2 * h * w));
  const auto plane = h * w;
  for (std::int64_t b = 0; b < n; ++b) {
    double* ys = data.data() + b * 2 * plane;
    double* xs = ys + plane;
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        ys[y * w + x] = static_cast<double>(y + dy);
        xs[y * w + x] = static_cast<double>(x + dx);
      }
    }
  }
  return Tensor({n, 2, h, w}, std::move(data));
}

}  // namespace

FilterHead FilterHead::create(std::int64_t decoder_channels, int kernel, std::mt19937_64& rng) {
  check_kernel(kernel);
  const std::int64_t taps = kernel * kernel;
  FilterHead f;
  f.weight_conv = Conv2d::create(decoder_channels + 1, taps, 3, 1, rng, Init::kZero);
  f.offset_conv = Conv2d::create(decoder_channels + 1, 2 * (taps - 1), 3, 1, rng, Init::kZero);
  return f;
}

void FilterHead::visit(const std::string& prefix, const ParamVisitor& fn) {
  weight_conv.visit(prefix + ".weight_conv", fn);
  offset_conv.visit(prefix + ".offset_conv", fn);
}

SDFParams SDFParams::create(std::int64_t decoder_channels, int kernel, std::mt19937_64& rng) {
  SDFParams p;
  p.kernel = kernel;
  p.smooth = FilterHead::create(decoder_channels, kernel, rng);
  p.sharp = FilterHead::create(decoder_channels, kernel, rng);
  p.attention = Conv2d::create(decoder_channels + 2, 1, 3, 1, rng, Init::kZero);
  return p;
}

void SDFParams::visit(const std::string& prefix, const ParamVisitor& fn) {
  smooth.visit(prefix + ".smooth", fn);
  sharp.visit(prefix + ".sharp", fn);
  attention.visit(prefix + ".attention", fn);
}

KernelField gen_kernel_field(const Tensor& depth_in, const Tensor& f_dec, const FilterHead& head,
                             int kernel, FilterKind kind) {
  check_kernel(kernel);
  if (depth_in.rank() != 4 || f_dec.rank() != 4 || depth_in.n() != f_dec.n() ||
      depth_in.h() != f_dec.h() || depth_in.w() != f_dec.w()) {
    throw DimensionError("gen_kernel_field: depth " + shape_str(depth_in.shape()) +
                         " does not match feature " + shape_str(f_dec.shape()));
  }
  const std::int64_t taps = kernel * kernel;
  const Tensor inputs[] = {depth_in, f_dec};
  const Tensor features = ops::concat_channels(inputs);

  KernelField kf;
  kf.kernel = kernel;
  kf.kind = kind;
  const Tensor logits = head.weight_conv(features);
  if (kind == FilterKind::kSmoothness) {
    kf.weights = ops::softmax_channel(logits);
  } else {
    const Tensor bounded = ops::tanh(logits);
    const Tensor mean = ops::scale(ops::sum_channels(bounded), 1.0 / static_cast<double>(taps));
    kf.weights = ops::sub(bounded, ops::repeat_channels(mean, taps));
  }

  const Tensor raw = head.offset_conv(features);
  const std::int64_t center = taps / 2;
  const Tensor zero_center = Tensor::zeros({depth_in.n(), 2, depth_in.h(), depth_in.w()});
  std::vector<Tensor> pieces;
  if (taps == 1) {
    pieces.push_back(zero_center);
  } else {
    const std::int64_t counts[] = {2 * center, 2 * (taps - 1 - center)};
    const auto halves = ops::split_channels(raw, counts);
    pieces = {halves[0], zero_center, halves[1]};
  }
  kf.offsets = ops::concat_channels(pieces);
  return kf;
}

Tensor deformable_response(const Tensor& depth, const KernelField& kf) {
  const std::int64_t k = kf.kernel;
  const std::int64_t taps = k * k;
  if (depth.rank() != 4 || depth.c() != 1) {
    throw DimensionError("deformable filter: depth must be N x 1 x H x W");
  }
  const auto n = depth.n(), h = depth.h(), w = depth.w();
  if (kf.weights.shape() != Shape{n, taps, h, w} || kf.offsets.shape() != Shape{n, 2 * taps, h, w}) {
    throw DimensionError("deformable filter: kernel field does not match depth " +
                         shape_str(depth.shape()));
  }
  const std::vector<std::int64_t> ones(static_cast<std::size_t>(taps), 1);
  const std::vector<std::int64_t> pairs(static_cast<std::size_t>(taps), 2);
  const auto weights = ops::split_channels(kf.weights, ones);
  const auto offsets = ops::split_channels(kf.offsets, pairs);

  Tensor acc;
  for (std::int64_t j = 0; j < taps; ++j) {
    const Tensor base = grid_coords(n, h, w, j / k - k / 2, j % k - k / 2);
    const Tensor coords = ops::add(base, offsets[static_cast<std::size_t>(j)]);
    const Tensor diff = ops::sub(ops::sample_bilinear_at(depth, coords), depth);
    const Tensor term = ops::mul(weights[static_cast<std::size_t>(j)], diff);
    acc = acc.defined() ? ops::add(acc, term) : term;
  }
  return acc;
}

Tensor smoothness_filter(const Tensor& depth, const KernelField& kf) {
  if (kf.kind != FilterKind::kSmoothness) throw DimensionError("smoothness_filter: wrong kernel kind");
  // Equal to sum_j w_j * sample_j because the weights sum to one.
  return ops::add(depth, deformable_response(depth, kf));
}

Tensor sharpness_filter(const Tensor& depth, const KernelField& kf) {
  if (kf.kind != FilterKind::kSharpness) throw DimensionError("sharpness_filter: wrong kernel kind");
  // Equal to depth + sum_j w_j * sample_j because the weights sum to zero.
  return ops::add(depth, deformable_response(depth, kf));
}

Tensor blend_with(const Tensor& d_m, const Tensor& d_a, const Tensor& selection) {
  return ops::add(ops::mul(selection, d_m), ops::mul(ops::one_minus(selection), d_a));
}

BlendResult selective_blend(const Tensor& d_m, const Tensor& d_a, const Tensor& f_dec,
                            const Conv2d& attention) {
  const Tensor parts[] = {f_dec, d_m, d_a};
  BlendResult r;
  r.selection = ops::sigmoid(attention(ops::concat_channels(parts)));
  r.output = blend_with(d_m, d_a, r.selection);
  return r;
}

SDFResult sdf_forward(const Tensor& depth_in, const Tensor& f_dec, const SDFParams& params) {
  const auto smooth_kf =
      gen_kernel_field(depth_in, f_dec, params.smooth, params.kernel, FilterKind::kSmoothness);
  const auto sharp_kf =
      gen_kernel_field(depth_in, f_dec, params.sharp, params.kernel, FilterKind::kSharpness);
  SDFResult r;
  r.smoothed = smoothness_filter(depth_in, smooth_kf);
  r.sharpened = sharpness_filter(r.smoothed, sharp_kf);
  const auto blend = selective_blend(r.smoothed, r.sharpened, f_dec, params.attention);
  r.output = blend.output;
  r.selection = blend.selection;
  return r;
}

}  // namespace lpnet
