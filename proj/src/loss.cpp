#include "lpnet/loss.hpp"

#include "lpnet/errors.hpp"
#include "lpnet/ops.hpp"

namespace lpnet {

LossResult multiscale_loss(const DepthPyramid& pyramid, const SparseDepth& gt,
                           const std::array<double, kScales>& scale_weights) {
  const auto valid = gt.valid_count();
  if (valid == 0) throw NumericalError("multiscale_loss: ground truth has no valid pixels");
  const double inv = 1.0 / static_cast<double>(valid);

  LossResult result;
  result.report.valid_count = valid;
  for (int s = 0; s < kScales; ++s) {
    const Tensor& pred = pyramid.predictions[static_cast<std::size_t>(s)];
    if (!pred.defined()) continue;
    const Tensor up = ops::bilinear_resize(pred, gt.depth.h(), gt.depth.w());
    if (up.shape() != gt.depth.shape()) {
      throw DimensionError("multiscale_loss: prediction batch does not match ground truth");
    }
    const Tensor residual = ops::mul(ops::sub(up, gt.depth), gt.mask);
    const double w = scale_weights[static_cast<std::size_t>(s)];
    const Tensor mse = ops::scale(ops::sum(ops::square(residual)), inv * w);
    const Tensor mae = ops::scale(ops::sum(ops::abs(residual)), inv * w);
    result.report.mse[static_cast<std::size_t>(s)] = mse.item();
    result.report.mae[static_cast<std::size_t>(s)] = mae.item();
    const Tensor term = ops::add(mse, mae);
    result.total = result.total.defined() ? ops::add(result.total, term) : term;
  }
  result.report.total = result.total.item();
  return result;
}

}  // namespace lpnet
