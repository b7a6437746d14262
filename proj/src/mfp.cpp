#include "lpnet/mfp.hpp"

#include "lpnet/errors.hpp"
#include "lpnet/ops.hpp"

namespace lpnet {

MFPParams MFPParams::create(std::int64_t channels, int paths, double slope, std::mt19937_64& rng) {
  if (paths < 1) throw DimensionError("MFP: path count must be >= 1");
  if (channels % paths != 0) {
    throw DimensionError("MFP: " + std::to_string(channels) + " channels not divisible by " +
                         std::to_string(paths) + " paths");
  }
  MFPParams p;
  p.paths = paths;
  p.slope = slope;
  const auto group = channels / paths;
  for (int i = 1; i <= paths; ++i) {
    std::vector<Conv2d> convs;
    for (int j = 0; j < i; ++j) convs.push_back(Conv2d::create(group, group, 3, 2, rng));
    p.path_convs.push_back(std::move(convs));
  }
  p.merge = Conv2d::create(channels, channels, 3, 1, rng);
  return p;
}

void MFPParams::visit(const std::string& prefix, const ParamVisitor& fn) {
  for (std::size_t i = 0; i < path_convs.size(); ++i) {
    for (std::size_t j = 0; j < path_convs[i].size(); ++j) {
      path_convs[i][j].visit(prefix + ".path" + std::to_string(i + 1) + ".conv" + std::to_string(j), fn);
    }
  }
  merge.visit(prefix + ".merge", fn);
}

Tensor mfp_forward(const Tensor& f_e, const MFPParams& params, MFPTrace* trace) {
  if (f_e.rank() != 4) throw DimensionError("mfp_forward: expected N x C x H x W");
  const int p = params.paths;
  if (f_e.c() % p != 0) {
    throw DimensionError("mfp_forward: " + std::to_string(f_e.c()) + " channels not divisible by " +
                         std::to_string(p) + " paths");
  }
  const std::int64_t deepest = std::int64_t{1} << p;
  if (f_e.h() < deepest || f_e.w() < deepest) {
    throw DimensionError("mfp_forward: " + shape_str(f_e.shape()) + " too small for " +
                         std::to_string(p) + " paths (needs >= " + std::to_string(deepest) + ")");
  }
  if (trace != nullptr) trace->path_shapes.assign(static_cast<std::size_t>(p), {});

  const std::vector<std::int64_t> counts(static_cast<std::size_t>(p), f_e.c() / p);
  const auto groups = ops::split_channels(f_e, counts);
  std::vector<Tensor> merged;
  for (int i = 0; i < p; ++i) {
    Tensor x = groups[static_cast<std::size_t>(i)];
    for (const auto& conv : params.path_convs[static_cast<std::size_t>(i)]) {
      x = ops::leaky_relu(conv(x), params.slope);
      if (trace != nullptr) trace->path_shapes[static_cast<std::size_t>(i)].push_back(x.shape());
    }
    merged.push_back(ops::bilinear_resize(x, f_e.h(), f_e.w()));
  }
  return ops::add(params.merge(ops::concat_channels(merged)), f_e);
}

}  // namespace lpnet
