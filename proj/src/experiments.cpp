#include "lpnet/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "lpnet/autograd.hpp"
#include "lpnet/errors.hpp"
#include "lpnet/ops.hpp"
#include "lpnet/rng.hpp"

namespace lpnet {

namespace {

Tensor flip_tensor(const Tensor& t) {
  const auto planes = t.n() * t.c(), h = t.h(), w = t.w();
  auto src = t.data();
  std::vector<double> out(src.size());
  for (std::int64_t p = 0; p < planes; ++p) {
    for (std::int64_t y = 0; y < h; ++y) {
      const auto row = (p * h + y) * w;
      for (std::int64_t x = 0; x < w; ++x) {
        out[static_cast<std::size_t>(row + x)] = src[static_cast<std::size_t>(row + w - 1 - x)];
      }
    }
  }
  return Tensor(t.shape(), std::move(out));
}

void add_into(std::vector<double>& acc, std::span<const double> g) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

void close_csv(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace

std::vector<Scene> make_scene_set(std::uint64_t root_seed, const std::string& purpose, int count,
                                  std::int64_t height, std::int64_t width, std::int64_t sparse_count) {
  auto rng = make_stream(root_seed, purpose);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(count));
  for (auto& s : seeds) s = rng();
  std::vector<Scene> scenes(seeds.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < count; ++i) {
    scenes[static_cast<std::size_t>(i)] =
        generate_scene(random_scene_spec(seeds[static_cast<std::size_t>(i)], height, width, sparse_count));
  }
  return scenes;
}

Scene flip_horizontal(const Scene& scene) {
  return Scene{flip_tensor(scene.image),
               SparseDepth{flip_tensor(scene.gt.depth), flip_tensor(scene.gt.mask)},
               SparseDepth{flip_tensor(scene.sparse.depth), flip_tensor(scene.sparse.mask)}};
}

TrainResult train(LPNetModel& model, const std::vector<Scene>& scenes, const TrainOptions& options,
                  const TrainProgress& progress) {
  if (scenes.empty()) throw ConfigError("train: no scenes");
  if (options.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");

  TrainResult result;
  result.initial_mean_loss = mean_loss(model, scenes, options.scale_weights);

  auto params = model.parameters();
  AdamState state;
  auto batch_rng = make_stream(options.seed, "batches");
  auto flip_rng = make_stream(options.seed, "augmentation");
  std::vector<std::size_t> order(scenes.size());
  std::size_t cursor = order.size();
  const auto batch = static_cast<std::size_t>(options.batch_size);

  for (int step = 1; step <= options.steps; ++step) {
    // Epoch-style sampling: reshuffle once every scene has been drawn.
    std::vector<std::size_t> picks(batch);
    std::vector<char> flips(batch, 0);
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), batch_rng);
        cursor = 0;
      }
      picks[b] = order[cursor++];
      if (options.flip_augmentation) flips[b] = static_cast<char>(flip_rng() & 1u);
    }

    std::vector<std::vector<std::vector<double>>> sample_grads(batch);
    std::vector<double> sample_loss(batch, 0.0);
    std::vector<std::string> errors(batch);
#pragma omp parallel for schedule(static)
    for (std::size_t b = 0; b < batch; ++b) {
      try {
        const Scene& base = scenes[picks[b]];
        const Scene scene = flips[b] ? flip_horizontal(base) : base;
        GradTape tape;
        {
          auto rec = tape.record();
          const auto pyramid = progressive_predict(scene.image, scene.sparse, model);
          const auto loss = multiscale_loss(pyramid, scene.gt, options.scale_weights);
          sample_loss[b] = loss.report.total;
          tape.backward(loss.total);
        }
        auto& grads = sample_grads[b];
        grads.reserve(params.size());
        for (const auto& p : params) {
          const Tensor g = tape.grad(p);
          grads.emplace_back(g.data().begin(), g.data().end());
        }
      } catch (const std::exception& e) {
        errors[b] = e.what();
      }
    }
    for (const auto& e : errors) {
      if (!e.empty()) throw NumericalError("train step " + std::to_string(step) + ": " + e);
    }

    std::vector<Tensor> grads;
    grads.reserve(params.size());
    double batch_loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) batch_loss += sample_loss[b];
    batch_loss /= static_cast<double>(batch);
    for (std::size_t k = 0; k < params.size(); ++k) {
      std::vector<double> acc(static_cast<std::size_t>(params[k].numel()), 0.0);
      for (std::size_t b = 0; b < batch; ++b) add_into(acc, sample_grads[b][k]);
      for (auto& v : acc) v /= static_cast<double>(batch);
      grads.emplace_back(params[k].shape(), std::move(acc));
    }
    adam_step(params, grads, state, options.adam);
    for (const auto& p : params) check_finite(p, "adam_step");

    result.loss_curve.push_back(batch_loss);
    if (progress) progress(step, batch_loss);
  }
  result.final_mean_loss = mean_loss(model, scenes, options.scale_weights);
  return result;
}

double mean_loss(const LPNetModel& model, const std::vector<Scene>& scenes,
                 const std::array<double, kScales>& scale_weights) {
  std::vector<double> losses(scenes.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto pyramid = progressive_predict(scenes[i].image, scenes[i].sparse, model);
    losses[i] = multiscale_loss(pyramid, scenes[i].gt, scale_weights).report.total;
  }
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(scenes.size());
}

MetricReport mean_report(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw NumericalError("mean_report: no reports");
  MetricReport m;
  for (const auto& r : reports) {
    m.rmse_mm += r.rmse_mm;
    m.mae_mm += r.mae_mm;
    m.irmse_per_km += r.irmse_per_km;
    m.imae_per_km += r.imae_per_km;
    m.rel += r.rel;
    m.delta1 += r.delta1;
    m.delta2 += r.delta2;
    m.delta3 += r.delta3;
  }
  const auto n = static_cast<double>(reports.size());
  m.rmse_mm /= n;
  m.mae_mm /= n;
  m.irmse_per_km /= n;
  m.imae_per_km /= n;
  m.rel /= n;
  m.delta1 /= n;
  m.delta2 /= n;
  m.delta3 /= n;
  return m;
}

MetricReport evaluate(const LPNetModel& model, const std::vector<Scene>& scenes, int steps) {
  std::vector<MetricReport> reports(scenes.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    reports[i] = compute_metrics(infer_steps(scenes[i].image, scenes[i].sparse, model, steps), scenes[i].gt);
  }
  return mean_report(reports);
}

Tensor interpolate_sparse(const SparseDepth& s) {
  s.validate();
  if (s.depth.n() != 1) throw DimensionError("interpolate_sparse: batch size must be 1");
  const auto h = s.depth.h(), w = s.depth.w();
  const auto valid = s.valid_count();
  if (valid == 0) throw NumericalError("interpolate_sparse: no valid measurements");

  // Largest power-of-two cell no bigger than the mean spacing between
  // measurements, limited so the grid keeps at least one cell per side.
  const double spacing = std::sqrt(static_cast<double>(h * w) / static_cast<double>(valid));
  std::int64_t cell = 1;
  while (cell * 2 <= spacing && h % (cell * 2) == 0 && w % (cell * 2) == 0) cell *= 2;

  struct Grid {
    std::int64_t h, w;
    std::vector<double> sum, count;
  };
  std::vector<Grid> levels;
  Grid g{h / cell, w / cell, {}, {}};
  g.sum.assign(static_cast<std::size_t>(g.h * g.w), 0.0);
  g.count.assign(g.sum.size(), 0.0);
  auto d = s.depth.data();
  auto m = s.mask.data();
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      const auto i = static_cast<std::size_t>(y * w + x);
      if (m[i] == 0.0) continue;
      const auto c = static_cast<std::size_t>((y / cell) * g.w + x / cell);
      g.sum[c] += d[i];
      g.count[c] += 1.0;
    }
  }
  levels.push_back(std::move(g));

  // Pull: 2x2 aggregation until a level is hole-free.
  auto has_holes = [](const Grid& grid) {
    return std::any_of(grid.count.begin(), grid.count.end(), [](double c) { return c == 0.0; });
  };
  while (has_holes(levels.back())) {
    const Grid& fine = levels.back();
    Grid coarse{(fine.h + 1) / 2, (fine.w + 1) / 2, {}, {}};
    coarse.sum.assign(static_cast<std::size_t>(coarse.h * coarse.w), 0.0);
    coarse.count.assign(coarse.sum.size(), 0.0);
    for (std::int64_t y = 0; y < fine.h; ++y) {
      for (std::int64_t x = 0; x < fine.w; ++x) {
        const auto f = static_cast<std::size_t>(y * fine.w + x);
        const auto c = static_cast<std::size_t>((y / 2) * coarse.w + x / 2);
        coarse.sum[c] += fine.sum[f];
        coarse.count[c] += fine.count[f];
      }
    }
    levels.push_back(std::move(coarse));
  }

  // Push: holes take the value of the enclosing coarser cell.
  for (auto l = levels.size() - 1; l-- > 0;) {
    Grid& fine = levels[l];
    const Grid& coarse = levels[l + 1];
    for (std::int64_t y = 0; y < fine.h; ++y) {
      for (std::int64_t x = 0; x < fine.w; ++x) {
        const auto f = static_cast<std::size_t>(y * fine.w + x);
        if (fine.count[f] != 0.0) continue;
        const auto c = static_cast<std::size_t>((y / 2) * coarse.w + x / 2);
        fine.sum[f] = coarse.sum[c] / coarse.count[c];
        fine.count[f] = 1.0;
      }
    }
  }

  const Grid& top = levels.front();
  std::vector<double> mean(top.sum.size());
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = top.sum[i] / top.count[i];
  return ops::bilinear_resize(Tensor({1, 1, top.h, top.w}, std::move(mean)), h, w);
}

MetricReport evaluate_baseline(const std::vector<Scene>& scenes) {
  std::vector<MetricReport> reports(scenes.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    reports[i] = compute_metrics(interpolate_sparse(scenes[i].sparse), scenes[i].gt);
  }
  return mean_report(reports);
}

std::vector<SparsityRow> run_sparsity_sweep(const LPNetModel& model, const std::vector<Scene>& scenes,
                                            const std::vector<double>& fractions, std::uint64_t seed) {
  std::vector<SparsityRow> rows;
  for (double fraction : fractions) {
    std::vector<MetricReport> reports(scenes.size());
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      const auto kept =
          sparsity_sample(scenes[i].sparse, fraction, stream_seed(seed, "sparsity/" + std::to_string(i)));
      reports[i] = compute_metrics(infer_steps(scenes[i].image, kept, model, kScales), scenes[i].gt);
    }
    rows.push_back(SparsityRow{fraction, mean_report(reports)});
  }
  return rows;
}

std::vector<StepsRow> run_steps_sweep(const LPNetModel& model, const std::vector<Scene>& scenes,
                                      int repeats) {
  if (repeats < 1) throw ConfigError("run_steps_sweep: repeats must be >= 1");
  std::vector<StepsRow> rows;
  for (int steps = 1; steps <= kScales; ++steps) rows.push_back(StepsRow{steps, evaluate(model, scenes, steps).rmse_mm, 0.0});

  // Warm-up pass so first-touch allocation does not land on one row.
  for (const auto& scene : scenes) infer_steps(scene.image, scene.sparse, model, kScales);

  std::vector<std::vector<double>> times(kScales);
  for (int r = 0; r < repeats; ++r) {
    for (int steps = 1; steps <= kScales; ++steps) {
      const auto t0 = std::chrono::steady_clock::now();
      for (const auto& scene : scenes) infer_steps(scene.image, scene.sparse, model, steps);
      const auto t1 = std::chrono::steady_clock::now();
      times[static_cast<std::size_t>(steps - 1)].push_back(
          std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
  }
  for (int k = 0; k < kScales; ++k) {
    auto& t = times[static_cast<std::size_t>(k)];
    std::sort(t.begin(), t.end());
    const auto mid = t.size() / 2;
    rows[static_cast<std::size_t>(k)].time_ms = t.size() % 2 ? t[mid] : 0.5 * (t[mid - 1] + t[mid]);
  }
  return rows;
}

void write_metrics_csv(const std::string& path, const MetricReport& report) {
  auto out = open_csv(path);
  out << "metric,value\n";
  for (const auto& [name, value] : report.fields()) out << name << ',' << format_number(value) << '\n';
  close_csv(out, path);
}

void write_sparsity_csv(const std::string& path, const std::vector<SparsityRow>& rows) {
  auto out = open_csv(path);
  out << "fraction";
  for (const auto& [name, value] : MetricReport{}.fields()) out << ',' << name;
  out << '\n';
  for (const auto& row : rows) {
    out << format_number(row.fraction);
    for (const auto& [name, value] : row.metrics.fields()) out << ',' << format_number(value);
    out << '\n';
  }
  close_csv(out, path);
}

void write_steps_csv(const std::string& path, const std::vector<StepsRow>& rows) {
  auto out = open_csv(path);
  out << "steps,rmse_mm,time_ms\n";
  for (const auto& row : rows) {
    out << row.steps << ',' << format_number(row.rmse_mm) << ',' << format_number(row.time_ms) << '\n';
  }
  close_csv(out, path);
}

void write_loss_curve_csv(const std::string& path, const std::vector<double>& losses) {
  auto out = open_csv(path);
  out << "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) out << i + 1 << ',' << format_number(losses[i]) << '\n';
  close_csv(out, path);
}

}  // namespace lpnet
