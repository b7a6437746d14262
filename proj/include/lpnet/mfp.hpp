#pragma once

#include <random>
#include <string>
#include <vector>

#include "lpnet/layers.hpp"

namespace lpnet {

/// Multi-path feature pyramid over a C-channel bottleneck feature.
///
/// The input is split into `paths` channel groups; path i (1-based) applies i
/// stride-2 3x3 convs (C/p -> C/p), each followed by leaky ReLU, and is
/// resized back to the input size. The paths are concatenated, merged by a
/// 3x3 conv and added to the input.
struct MFPParams {
  int paths = 4;
  double slope = 0.1;
  std::vector<std::vector<Conv2d>> path_convs;
  Conv2d merge;

  static MFPParams create(std::int64_t channels, int paths, double slope, std::mt19937_64& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

// Per-path intermediate shapes after each stride-2 conv.
struct MFPTrace {
  std::vector<std::vector<Shape>> path_shapes;
};

Tensor mfp_forward(const Tensor& f_e, const MFPParams& params, MFPTrace* trace = nullptr);

}  // namespace lpnet
