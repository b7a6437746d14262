#pragma once

#include <random>
#include <string>

#include "lpnet/layers.hpp"
#include "lpnet/sparse_depth.hpp"

namespace lpnet {

// 3x3 conv over cat(decoder feature, pooled sparse depth) -> 1 logit.
struct ConfidenceHead {
  Conv2d conv;

  static ConfidenceHead create(std::int64_t decoder_channels, std::mt19937_64& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

// sigmoid(conv(cat(f_dec, s.depth))) forced to 0 where s has no measurement.
Tensor estimate_confidence(const Tensor& f_dec, const SparseDepth& s, const ConfidenceHead& head);

// c * s.depth + (1 - c) * coarse, elementwise.
Tensor fuse_depth(const Tensor& coarse, const SparseDepth& s, const Tensor& confidence);

}  // namespace lpnet
