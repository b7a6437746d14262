#include "lpnet/run.hpp"

#include <filesystem>
#include <fstream>

#include "lpnet/checkpoint.hpp"
#include "lpnet/errors.hpp"

namespace lpnet {

std::vector<Scene> training_scenes(const RunConfig& config) {
  return make_scene_set(config.seed, "train-scenes", config.train_scenes, config.height, config.width,
                        config.sparse_count);
}

std::vector<Scene> heldout_scenes(const RunConfig& config) {
  return make_scene_set(config.seed, "heldout-scenes", config.heldout_scenes, config.height, config.width,
                        config.sparse_count);
}

TrainOptions train_options(const RunConfig& config) {
  TrainOptions o;
  o.steps = config.steps;
  o.batch_size = config.batch_size;
  o.adam.lr = config.lr;
  o.flip_augmentation = config.flip_augmentation;
  o.scale_weights = config.scale_weights;
  o.seed = config.seed;
  return o;
}

std::string output_path(const RunConfig& config, const std::string& file) {
  return (std::filesystem::path(config.output_dir) / file).string();
}

void prepare_output_dir(const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create " + config.output_dir + ": " + ec.message());
  const auto path = output_path(config, kResolvedConfigFile);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << config.to_text();
  if (!out) throw IoError("write failed for " + path);
}

TrainRun run_training(const RunConfig& config, const TrainProgress& progress) {
  config.validate();
  prepare_output_dir(config);
  const auto train_set = training_scenes(config);
  const auto heldout_set = heldout_scenes(config);

  TrainRun run{LPNetModel::create(config.arch, config.seed), {}, {}, {}};
  run.result = train(run.model, train_set, train_options(config), progress);
  run.heldout = evaluate(run.model, heldout_set);
  run.baseline = evaluate_baseline(heldout_set);

  save_checkpoint(output_path(config, kCheckpointFile), run.model);
  write_loss_curve_csv(output_path(config, kLossCurveFile), run.result.loss_curve);

  const auto summary = output_path(config, kTrainSummaryFile);
  std::ofstream out(summary, std::ios::trunc);
  if (!out) throw IoError("cannot write " + summary);
  const double drop = 1.0 - run.result.final_mean_loss / run.result.initial_mean_loss;
  out << "metric,value\n"
      << "initial_mean_loss," << format_number(run.result.initial_mean_loss) << '\n'
      << "final_mean_loss," << format_number(run.result.final_mean_loss) << '\n'
      << "loss_drop_fraction," << format_number(drop) << '\n'
      << "heldout_rmse_mm," << format_number(run.heldout.rmse_mm) << '\n'
      << "baseline_rmse_mm," << format_number(run.baseline.rmse_mm) << '\n'
      << "parameter_count," << run.model.parameter_count() << '\n';
  if (!out) throw IoError("write failed for " + summary);
  return run;
}

}  // namespace lpnet
