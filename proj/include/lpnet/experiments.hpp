#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lpnet/adam.hpp"
#include "lpnet/loss.hpp"
#include "lpnet/metrics.hpp"
#include "lpnet/network.hpp"
#include "lpnet/scene.hpp"
#include "lpnet/text.hpp"

namespace lpnet {

// `count` random scenes; scene i is drawn from stream "<purpose>" of `root_seed`.
std::vector<Scene> make_scene_set(std::uint64_t root_seed, const std::string& purpose, int count,
                                  std::int64_t height, std::int64_t width, std::int64_t sparse_count);

// Mirrors every scene tensor left to right.
Scene flip_horizontal(const Scene& scene);

struct TrainOptions {
  int steps = 300;
  int batch_size = 4;
  AdamOptions adam;
  bool flip_augmentation = true;
  std::array<double, kScales> scale_weights{1, 1, 1, 1, 1};
  std::uint64_t seed = 0;  // batch order and augmentation streams
};

struct TrainResult {
  std::vector<double> loss_curve;  // mean batch loss per step
  double initial_mean_loss = 0.0;  // over the full training set, before step 1
  double final_mean_loss = 0.0;    // after the last step
};

using TrainProgress = std::function<void(int step, double batch_loss)>;

/// Adam on the mean multi-scale loss of seeded mini-batches. Samples in a
/// batch run on separate tapes; gradients are reduced in batch order, so
/// results do not depend on the thread count.
TrainResult train(LPNetModel& model, const std::vector<Scene>& scenes, const TrainOptions& options,
                  const TrainProgress& progress = {});

// Mean full-pipeline loss over `scenes`, no gradients.
double mean_loss(const LPNetModel& model, const std::vector<Scene>& scenes,
                 const std::array<double, kScales>& scale_weights = {1, 1, 1, 1, 1});

// Mean of the per-scene metrics of infer_steps(steps).
MetricReport evaluate(const LPNetModel& model, const std::vector<Scene>& scenes, int steps = kScales);

/// Non-learned reference: sparse depths averaged into a grid whose cell
/// count matches the number of measurements, holes filled by push-pull from
/// coarser grids, then bilinear upsampling to full resolution.
Tensor interpolate_sparse(const SparseDepth& s);
MetricReport evaluate_baseline(const std::vector<Scene>& scenes);

MetricReport mean_report(const std::vector<MetricReport>& reports);

struct SparsityRow {
  double fraction = 1.0;
  MetricReport metrics;
};

// Re-evaluates the fixed model after keeping each fraction of every scene's sparse points.
std::vector<SparsityRow> run_sparsity_sweep(const LPNetModel& model, const std::vector<Scene>& scenes,
                                            const std::vector<double>& fractions, std::uint64_t seed);

struct StepsRow {
  int steps = 0;
  double rmse_mm = 0.0;
  double time_ms = 0.0;  // median over repeats of one pass over all scenes
};

/// Accuracy and wall time for steps 1..5. Timing repeats interleave the step
/// counts so drift affects every row alike.
std::vector<StepsRow> run_steps_sweep(const LPNetModel& model, const std::vector<Scene>& scenes,
                                      int repeats = 5);

void write_metrics_csv(const std::string& path, const MetricReport& report);
void write_sparsity_csv(const std::string& path, const std::vector<SparsityRow>& rows);
void write_steps_csv(const std::string& path, const std::vector<StepsRow>& rows);
void write_loss_curve_csv(const std::string& path, const std::vector<double>& losses);

}  // namespace lpnet
