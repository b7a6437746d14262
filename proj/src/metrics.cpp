#include "lpnet/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "lpnet/errors.hpp"

namespace lpnet {

std::vector<std::pair<std::string, double>> MetricReport::fields() const {
  return {{"rmse_mm", rmse_mm}, {"mae_mm", mae_mm}, {"irmse_per_km", irmse_per_km},
          {"imae_per_km", imae_per_km}, {"rel", rel}, {"delta1", delta1},
          {"delta2", delta2}, {"delta3", delta3}};
}

MetricReport compute_metrics(const Tensor& pred, const SparseDepth& gt) {
  if (pred.shape() != gt.depth.shape()) {
    throw DimensionError("compute_metrics: prediction " + shape_str(pred.shape()) +
                         " does not match ground truth " + shape_str(gt.depth.shape()));
  }
  auto p = pred.data();
  auto g = gt.depth.data();
  auto m = gt.mask.data();
  double sq = 0, ab = 0, isq = 0, iab = 0, rel = 0;
  std::int64_t d1 = 0, d2 = 0, d3 = 0, count = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (m[i] == 0.0) continue;
    if (!(g[i] > 0.0)) throw NumericalError("compute_metrics: non-positive ground truth at a valid pixel");
    ++count;
    const double d = std::max(p[i], 0.0);
    const double err = d - g[i];
    sq += err * err;
    ab += std::abs(err);
    rel += std::abs(err) / g[i];
    const double dc = std::max(p[i], kMinMetricDepth);
    const double ierr = 1.0 / dc - 1.0 / g[i];
    isq += ierr * ierr;
    iab += std::abs(ierr);
    const double ratio = std::max(dc / g[i], g[i] / dc);
    d1 += ratio < 1.25;
    d2 += ratio < 1.25 * 1.25;
    d3 += ratio < 1.25 * 1.25 * 1.25;
  }
  if (count == 0) throw NumericalError("compute_metrics: ground truth has no valid pixels");
  const double n = static_cast<double>(count);
  MetricReport r;
  r.rmse_mm = std::sqrt(sq / n) * 1000.0;
  r.mae_mm = ab / n * 1000.0;
  r.irmse_per_km = std::sqrt(isq / n) * 1000.0;
  r.imae_per_km = iab / n * 1000.0;
  r.rel = rel / n;
  r.delta1 = 100.0 * static_cast<double>(d1) / n;
  r.delta2 = 100.0 * static_cast<double>(d2) / n;
  r.delta3 = 100.0 * static_cast<double>(d3) / n;
  return r;
}

}  // namespace lpnet
