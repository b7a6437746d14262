#include "lpnet/fusion.hpp"

#include "lpnet/errors.hpp"
#include "lpnet/ops.hpp"

namespace lpnet {

ConfidenceHead ConfidenceHead::create(std::int64_t decoder_channels, std::mt19937_64& rng) {
  return ConfidenceHead{Conv2d::create(decoder_channels + 1, 1, 3, 1, rng)};
}

void ConfidenceHead::visit(const std::string& prefix, const ParamVisitor& fn) {
  conv.visit(prefix + ".conv", fn);
}

Tensor estimate_confidence(const Tensor& f_dec, const SparseDepth& s, const ConfidenceHead& head) {
  if (f_dec.rank() != 4 || f_dec.n() != s.depth.n() || f_dec.h() != s.depth.h() ||
      f_dec.w() != s.depth.w()) {
    throw DimensionError("estimate_confidence: feature " + shape_str(f_dec.shape()) +
                         " does not match sparse depth " + shape_str(s.depth.shape()));
  }
  const Tensor parts[] = {f_dec, s.depth};
  const Tensor c = ops::sigmoid(head.conv(ops::concat_channels(parts)));
  return ops::mul(c, s.mask);
}

Tensor fuse_depth(const Tensor& coarse, const SparseDepth& s, const Tensor& confidence) {
  return ops::add(ops::mul(confidence, s.depth), ops::mul(ops::one_minus(confidence), coarse));
}

}  // namespace lpnet
