#pragma once

#include <string>
#include <vector>

#include "lpnet/config.hpp"
#include "lpnet/experiments.hpp"

namespace lpnet {

// Scene sets are fixed by the config seed; the two purposes never overlap.
std::vector<Scene> training_scenes(const RunConfig& config);
std::vector<Scene> heldout_scenes(const RunConfig& config);

TrainOptions train_options(const RunConfig& config);

// Creates output_dir and writes the resolved config echo into it.
void prepare_output_dir(const RunConfig& config);

struct TrainRun {
  LPNetModel model;
  TrainResult result;
  MetricReport heldout;
  MetricReport baseline;
};

/// Trains a fresh model and writes config.resolved.txt, checkpoint.lpnet,
/// loss_curve.csv and train_summary.csv to output_dir.
TrainRun run_training(const RunConfig& config, const TrainProgress& progress = {});

// File names inside output_dir.
inline constexpr char kResolvedConfigFile[] = "config.resolved.txt";
inline constexpr char kCheckpointFile[] = "checkpoint.lpnet";
inline constexpr char kLossCurveFile[] = "loss_curve.csv";
inline constexpr char kTrainSummaryFile[] = "train_summary.csv";

std::string output_path(const RunConfig& config, const std::string& file);

}  // namespace lpnet
