#include "lpnet/layers.hpp"

#include <cmath>

#include "lpnet/ops.hpp"

namespace lpnet {

namespace {

Tensor he_normal(Shape shape, std::int64_t fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  std::vector<double> data(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : data) v = dist(rng);
  Tensor t(std::move(shape), std::move(data));
  t.set_requires_grad(true);
  return t;
}

Tensor zeros_param(Shape shape) {
  Tensor t = Tensor::zeros(std::move(shape));
  t.set_requires_grad(true);
  return t;
}

}  // namespace

Conv2d Conv2d::create(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride,
                      std::mt19937_64& rng, Init init) {
  Conv2d c;
  Shape shape{out, in, kernel, kernel};
  c.weight = init == Init::kZero ? zeros_param(shape) : he_normal(shape, in * kernel * kernel, rng);
  c.bias = zeros_param({out});
  c.stride = stride;
  c.pad = kernel / 2;
  return c;
}

Tensor Conv2d::operator()(const Tensor& x) const { return ops::conv2d(x, weight, bias, stride, pad); }

void Conv2d::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".weight", weight);
  fn(prefix + ".bias", bias);
}

ConvTranspose2d ConvTranspose2d::create(std::int64_t in, std::int64_t out, std::mt19937_64& rng) {
  ConvTranspose2d c;
  // Each output pixel sees about in * 9 / 4 taps at stride 2.
  c.weight = he_normal({in, out, 3, 3}, std::max<std::int64_t>(1, in * 9 / 4), rng);
  c.bias = zeros_param({out});
  return c;
}

Tensor ConvTranspose2d::operator()(const Tensor& x) const {
  return ops::conv2d_transpose(x, weight, bias, 2, 1, 1);
}

void ConvTranspose2d::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".weight", weight);
  fn(prefix + ".bias", bias);
}

ResidualBlock ResidualBlock::create(std::int64_t in, std::int64_t out, std::int64_t stride,
                                    double slope, std::mt19937_64& rng) {
  ResidualBlock b;
  b.conv1 = Conv2d::create(in, out, 3, stride, rng);
  b.conv2 = Conv2d::create(out, out, 3, 1, rng, Init::kZero);
  if (in != out || stride != 1) b.shortcut = Conv2d::create(in, out, 1, stride, rng);
  b.slope = slope;
  return b;
}

Tensor ResidualBlock::operator()(const Tensor& x) const {
  Tensor y = ops::leaky_relu(conv1(x), slope);
  y = conv2(y);
  const Tensor skip = shortcut ? (*shortcut)(x) : x;
  return ops::leaky_relu(ops::add(y, skip), slope);
}

void ResidualBlock::visit(const std::string& prefix, const ParamVisitor& fn) {
  conv1.visit(prefix + ".conv1", fn);
  conv2.visit(prefix + ".conv2", fn);
  if (shortcut) shortcut->visit(prefix + ".shortcut", fn);
}

}  // namespace lpnet
