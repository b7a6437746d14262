#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lpnet/tensor.hpp"

namespace lpnet {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t step = 0;
};

// One bias-corrected Adam update, in place on `params`. State is sized lazily
// on the first call.
void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state,
               const AdamOptions& options);

}  // namespace lpnet
