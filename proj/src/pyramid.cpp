#include "lpnet/pyramid.hpp"

#include <string>

#include "lpnet/errors.hpp"
#include "lpnet/ops.hpp"

namespace lpnet {

Tensor down(const Tensor& x) {
  if (x.rank() != 4 || x.h() < 2 || x.w() < 2) {
    throw DimensionError("down: needs N x C x H x W with H, W >= 2, got " + shape_str(x.shape()));
  }
  return ops::scale(ops::sum_pool(x, 2), 0.25);
}

Tensor up(const Tensor& x) { return ops::bilinear_resize(x, 2 * x.h(), 2 * x.w()); }

LaplacianLevels laplacian_decompose(const Tensor& x, int levels) {
  if (levels < 0) throw DimensionError("laplacian_decompose: levels must be >= 0");
  if (x.rank() != 4) throw DimensionError("laplacian_decompose: expected N x C x H x W");
  const std::int64_t factor = std::int64_t{1} << levels;
  if (x.h() % factor != 0 || x.w() % factor != 0) {
    throw DimensionError("laplacian_decompose: " + shape_str(x.shape()) + " not divisible by " +
                         std::to_string(factor));
  }
  LaplacianLevels out;
  Tensor current = x;
  for (int l = 0; l < levels; ++l) {
    Tensor coarser = down(current);
    out.bandpass.push_back(ops::sub(current, up(coarser)));
    current = std::move(coarser);
  }
  out.residual = current;
  return out;
}

Tensor laplacian_reconstruct(const LaplacianLevels& levels) {
  Tensor current = levels.residual;
  for (int l = levels.level_count() - 1; l >= 0; --l) {
    const Tensor& band = levels.bandpass[static_cast<std::size_t>(l)];
    Tensor upsampled = up(current);
    if (upsampled.shape() != band.shape()) {
      throw DimensionError("laplacian_reconstruct: level " + std::to_string(l) + " has shape " +
                           shape_str(band.shape()) + ", expected " + shape_str(upsampled.shape()));
    }
    current = ops::add(upsampled, band);
  }
  return current;
}

}  // namespace lpnet
