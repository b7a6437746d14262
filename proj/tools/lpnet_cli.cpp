#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lpnet/checkpoint.hpp"
#include "lpnet/config.hpp"
#include "lpnet/errors.hpp"
#include "lpnet/gradcheck_suite.hpp"
#include "lpnet/image_io.hpp"
#include "lpnet/ops.hpp"
#include "lpnet/pyramid.hpp"
#include "lpnet/run.hpp"

namespace fs = std::filesystem;
using namespace lpnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

// One line per failure: error<TAB>kind<TAB>message, message on one line.
int fail(const char* kind, int code, const std::string& message) {
  std::string flat = message;
  for (auto& ch : flat) {
    if (ch == '\n' || ch == '\t') ch = ' ';
  }
  std::cerr << "error\t" << kind << '\t' << flat << '\n';
  return code;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::map<std::string, std::string> kv;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    kv = parse_key_values(ss.str());
  }
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + item);
    const auto one = parse_key_values(item.substr(0, eq) + " = " + item.substr(eq + 1));
    for (const auto& [k, v] : one) kv[k] = v;
  }
  std::string text;
  for (const auto& [k, v] : kv) text += k + " = " + v + "\n";
  return RunConfig::from_text(text);
}

Tensor read_depth_any(const std::string& path) {
  const auto ext = fs::path(path).extension().string();
  if (ext == ".pfm") return read_pfm(path);
  if (ext == ".pgm") return read_pgm16(path).depth;
  throw IoError("unsupported depth file (expected .pgm or .pfm): " + path);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
}

std::string in_dir(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;

  void add_to(CLI::App* cmd) {
    cmd->add_option("-c,--config", path, "Run configuration (key = value lines)");
    cmd->add_option("--set", overrides, "Override a config key: key=value (repeatable)");
  }
  RunConfig load() const { return load_config(path, overrides); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LP-Net depth completion"};
  app.require_subcommand(1);

  // train
  ConfigArgs train_cfg;
  bool quiet = false;
  auto* train_cmd = app.add_subcommand("train", "Train on synthetic scenes; writes checkpoint and loss curve");
  train_cfg.add_to(train_cmd);
  train_cmd->add_flag("-q,--quiet", quiet, "No progress output");

  // eval
  ConfigArgs eval_cfg;
  std::string eval_ckpt, eval_pred, eval_gt, eval_out = "metrics.csv";
  int eval_steps = kScales;
  bool eval_baseline = false;
  auto* eval_cmd = app.add_subcommand("eval", "Metrics on held-out scenes, or on a prediction/ground-truth pair");
  eval_cfg.add_to(eval_cmd);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Model checkpoint");
  eval_cmd->add_option("--steps", eval_steps, "Progressive steps")->check(CLI::Range(1, kScales));
  eval_cmd->add_flag("--baseline", eval_baseline, "Evaluate sparse-point interpolation instead of a model");
  eval_cmd->add_option("--pred", eval_pred, "Predicted depth (.pgm or .pfm)");
  eval_cmd->add_option("--gt", eval_gt, "Ground-truth depth (.pgm, raw 0 = invalid)");
  eval_cmd->add_option("-o,--out", eval_out, "Metrics CSV");

  // infer
  std::string infer_ckpt, infer_image, infer_sparse, infer_out = "prediction.pgm", infer_sel_dir, infer_pfm;
  int infer_steps = kScales;
  auto* infer_cmd = app.add_subcommand("infer", "Complete one depth map");
  infer_cmd->add_option("--checkpoint", infer_ckpt, "Model checkpoint")->required();
  infer_cmd->add_option("--image", infer_image, "Color image (PF .pfm)")->required();
  infer_cmd->add_option("--sparse", infer_sparse, "Sparse depth (.pgm)")->required();
  infer_cmd->add_option("--steps", infer_steps, "Progressive steps")->check(CLI::Range(1, kScales));
  infer_cmd->add_option("-o,--out", infer_out, "Predicted depth (.pgm)");
  infer_cmd->add_option("--pfm-out", infer_pfm, "Also write the prediction as .pfm");
  infer_cmd->add_option("--selection-dir", infer_sel_dir, "Write SDF selection maps here");

  // decompose / reconstruct
  std::string dec_in, dec_out_dir;
  int dec_levels = 4;
  auto* decompose_cmd = app.add_subcommand("decompose", "Laplacian pyramid of a depth map");
  decompose_cmd->add_option("input", dec_in, "Depth map (.pgm or .pfm)")->required();
  decompose_cmd->add_option("--levels", dec_levels, "Pyramid levels")->check(CLI::Range(1, 16));
  decompose_cmd->add_option("-o,--out-dir", dec_out_dir, "Output directory")->required();

  std::string rec_dir, rec_out;
  auto* reconstruct_cmd = app.add_subcommand("reconstruct", "Invert a pyramid written by decompose");
  reconstruct_cmd->add_option("dir", rec_dir, "Directory written by decompose")->required();
  reconstruct_cmd->add_option("-o,--out", rec_out, "Reconstructed depth (.pfm)")->required();

  // gradcheck
  std::uint64_t gc_seed = 1;
  std::int64_t gc_checks = 8;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every op and the full model loss");
  gradcheck_cmd->add_option("--seed", gc_seed, "Seed for inputs and probes");
  gradcheck_cmd->add_option("--checks-per-param", gc_checks, "Probed elements per model parameter tensor");

  // sweeps
  ConfigArgs sparsity_cfg;
  std::string sparsity_ckpt, sparsity_out;
  auto* sparsity_cmd = app.add_subcommand("sweep-sparsity", "Held-out metrics at reduced sparse-point fractions");
  sparsity_cfg.add_to(sparsity_cmd);
  sparsity_cmd->add_option("--checkpoint", sparsity_ckpt, "Model checkpoint")->required();
  sparsity_cmd->add_option("-o,--out", sparsity_out, "CSV path (default <output_dir>/sparsity.csv)");

  ConfigArgs steps_cfg;
  std::string steps_ckpt, steps_out;
  auto* steps_cmd = app.add_subcommand("sweep-steps", "Held-out RMSE and wall time for 1..5 progressive steps");
  steps_cfg.add_to(steps_cmd);
  steps_cmd->add_option("--checkpoint", steps_ckpt, "Model checkpoint")->required();
  steps_cmd->add_option("-o,--out", steps_out, "CSV path (default <output_dir>/steps.csv)");

  // scene
  std::uint64_t scene_seed = 0;
  std::int64_t scene_h = 64, scene_w = 64, scene_sparse = 200;
  std::string scene_dir;
  auto* scene_cmd = app.add_subcommand("scene", "Render one synthetic scene (image.pfm, gt.pgm, sparse.pgm)");
  scene_cmd->add_option("--seed", scene_seed, "Scene seed");
  scene_cmd->add_option("--height", scene_h, "Rows");
  scene_cmd->add_option("--width", scene_w, "Columns");
  scene_cmd->add_option("--sparse-count", scene_sparse, "Sparse samples");
  scene_cmd->add_option("-o,--out-dir", scene_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", kExitConfig, e.what());
  }

  try {
    if (*train_cmd) {
      const auto config = train_cfg.load();
      const auto run = run_training(config, [&](int step, double loss) {
        if (!quiet && (step % 25 == 0 || step == config.steps)) {
          std::cerr << "step " << step << "/" << config.steps << " loss " << loss << '\n';
        }
      });
      std::cout << "initial_mean_loss " << run.result.initial_mean_loss << '\n'
                << "final_mean_loss " << run.result.final_mean_loss << '\n'
                << "heldout_rmse_mm " << run.heldout.rmse_mm << '\n'
                << "baseline_rmse_mm " << run.baseline.rmse_mm << '\n'
                << "wrote " << output_path(config, kCheckpointFile) << '\n';
    } else if (*eval_cmd) {
      MetricReport report;
      if (!eval_pred.empty() || !eval_gt.empty()) {
        if (eval_pred.empty() || eval_gt.empty()) throw ConfigError("eval needs both --pred and --gt");
        report = compute_metrics(read_depth_any(eval_pred), read_pgm16(eval_gt));
      } else {
        const auto config = eval_cfg.load();
        const auto scenes = heldout_scenes(config);
        if (eval_baseline) {
          report = evaluate_baseline(scenes);
        } else {
          if (eval_ckpt.empty()) throw ConfigError("eval needs --checkpoint, --baseline, or --pred/--gt");
          report = evaluate(load_checkpoint(eval_ckpt), scenes, eval_steps);
        }
      }
      write_metrics_csv(eval_out, report);
      for (const auto& [name, value] : report.fields()) std::cout << name << ' ' << value << '\n';
    } else if (*infer_cmd) {
      const auto model = load_checkpoint(infer_ckpt);
      const auto image = read_pfm(infer_image);
      const auto sparse = read_pgm16(infer_sparse);
      const auto pyramid = progressive_predict(image, sparse, model, infer_steps);
      const auto pred = ops::bilinear_resize(pyramid.finest(), image.h(), image.w());
      write_pgm16(infer_out, pred);
      if (!infer_pfm.empty()) write_pfm(infer_pfm, pred);
      if (!infer_sel_dir.empty()) {
        ensure_dir(infer_sel_dir);
        for (int s = pyramid.finest_scale(); s < kScales - 1; ++s) {
          write_pfm(in_dir(infer_sel_dir, "selection_scale" + std::to_string(s) + ".pfm"),
                    pyramid.selections[static_cast<std::size_t>(s)]);
        }
      }
    } else if (*decompose_cmd) {
      const auto levels = laplacian_decompose(read_depth_any(dec_in), dec_levels);
      ensure_dir(dec_out_dir);
      for (int i = 0; i < levels.level_count(); ++i) {
        write_pfm(in_dir(dec_out_dir, "bandpass_" + std::to_string(i) + ".pfm"),
                  levels.bandpass[static_cast<std::size_t>(i)]);
      }
      write_pfm(in_dir(dec_out_dir, "residual.pfm"), levels.residual);
    } else if (*reconstruct_cmd) {
      LaplacianLevels levels;
      for (int i = 0; fs::exists(in_dir(rec_dir, "bandpass_" + std::to_string(i) + ".pfm")); ++i) {
        levels.bandpass.push_back(read_pfm(in_dir(rec_dir, "bandpass_" + std::to_string(i) + ".pfm")));
      }
      if (levels.bandpass.empty()) throw IoError("no bandpass_0.pfm in " + rec_dir);
      levels.residual = read_pfm(in_dir(rec_dir, "residual.pfm"));
      write_pfm(rec_out, laplacian_reconstruct(levels));
    } else if (*gradcheck_cmd) {
      auto cases = primitive_gradcheck_cases(gc_seed);
      cases.push_back(model_gradcheck_case(gc_seed, gc_checks));
      bool ok = true;
      for (const auto& outcome : run_gradcheck_suite(std::move(cases))) {
        const auto& r = outcome.report;
        ok = ok && r.passed;
        std::cout << (r.passed ? "PASS " : "FAIL ") << outcome.name << "  probes=" << r.entries.size()
                  << " max_rel_error=" << r.max_rel_error << '\n';
      }
      if (!ok) return fail("numerical", kExitNumerical, "gradient check failed");
    } else if (*sparsity_cmd) {
      const auto config = sparsity_cfg.load();
      prepare_output_dir(config);
      const auto rows = run_sparsity_sweep(load_checkpoint(sparsity_ckpt), heldout_scenes(config),
                                           config.sparsity_fractions, config.seed);
      const auto out = sparsity_out.empty() ? output_path(config, "sparsity.csv") : sparsity_out;
      write_sparsity_csv(out, rows);
      for (const auto& row : rows) std::cout << row.fraction << ' ' << row.metrics.rmse_mm << '\n';
    } else if (*steps_cmd) {
      const auto config = steps_cfg.load();
      prepare_output_dir(config);
      const auto rows =
          run_steps_sweep(load_checkpoint(steps_ckpt), heldout_scenes(config), config.timing_repeats);
      const auto out = steps_out.empty() ? output_path(config, "steps.csv") : steps_out;
      write_steps_csv(out, rows);
      for (const auto& row : rows) std::cout << row.steps << ' ' << row.rmse_mm << ' ' << row.time_ms << '\n';
    } else if (*scene_cmd) {
      const auto scene = generate_scene(random_scene_spec(scene_seed, scene_h, scene_w, scene_sparse));
      ensure_dir(scene_dir);
      write_pfm(in_dir(scene_dir, "image.pfm"), scene.image);
      write_pgm16(in_dir(scene_dir, "gt.pgm"), scene.gt);
      write_pgm16(in_dir(scene_dir, "sparse.pgm"), scene.sparse);
    }
  } catch (const ConfigError& e) {
    return fail("config", kExitConfig, e.what());
  } catch (const DimensionError& e) {
    return fail("config", kExitConfig, e.what());
  } catch (const IoError& e) {
    return fail("io", kExitIo, e.what());
  } catch (const NumericalError& e) {
    return fail("numerical", kExitNumerical, e.what());
  } catch (const std::exception& e) {
    return fail("internal", 1, e.what());
  }
  return kExitOk;
}
