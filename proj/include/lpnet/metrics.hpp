#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lpnet/sparse_depth.hpp"

namespace lpnet {

// Predictions below this are raised to it before inverse-depth and ratio metrics.
inline constexpr double kMinMetricDepth = 1e-3;

struct MetricReport {
  double rmse_mm = 0.0;
  double mae_mm = 0.0;
  double irmse_per_km = 0.0;
  double imae_per_km = 0.0;
  double rel = 0.0;
  double delta1 = 0.0;  // percent
  double delta2 = 0.0;
  double delta3 = 0.0;

  // (name, value) in a fixed order; names match the CSV columns.
  std::vector<std::pair<std::string, double>> fields() const;
};

// Evaluates over the valid pixels of `gt`; negative predictions count as 0.
MetricReport compute_metrics(const Tensor& pred, const SparseDepth& gt);

}  // namespace lpnet
