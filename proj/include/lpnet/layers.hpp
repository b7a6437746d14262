#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>

#include "lpnet/tensor.hpp"

namespace lpnet {

// Called once per parameter tensor with its dotted path name.
using ParamVisitor = std::function<void(const std::string& name, Tensor& param)>;

enum class Init { kHe, kZero };

struct Conv2d {
  Tensor weight;  // out x in x k x k
  Tensor bias;    // out
  std::int64_t stride = 1;
  std::int64_t pad = 0;

  static Conv2d create(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride,
                       std::mt19937_64& rng, Init init = Init::kHe);

  Tensor operator()(const Tensor& x) const;
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

// Stride-2 3x3 upsampler: output is exactly twice the input size.
struct ConvTranspose2d {
  Tensor weight;  // in x out x 3 x 3
  Tensor bias;

  static ConvTranspose2d create(std::int64_t in, std::int64_t out, std::mt19937_64& rng);

  Tensor operator()(const Tensor& x) const;
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

// Two 3x3 convs with leaky ReLU; 1x1 projection shortcut when the shape changes.
struct ResidualBlock {
  Conv2d conv1;
  Conv2d conv2;
  std::optional<Conv2d> shortcut;
  double slope = 0.1;

  static ResidualBlock create(std::int64_t in, std::int64_t out, std::int64_t stride, double slope,
                              std::mt19937_64& rng);

  Tensor operator()(const Tensor& x) const;
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

}  // namespace lpnet
