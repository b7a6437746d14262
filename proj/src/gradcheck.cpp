#include "lpnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lpnet/autograd.hpp"
#include "lpnet/branch_monitor.hpp"
#include "lpnet/errors.hpp"
#include "lpnet/rng.hpp"

namespace lpnet {

const GradCheckEntry* GradCheckReport::worst() const {
  if (entries.empty()) return nullptr;
  return &*std::max_element(entries.begin(), entries.end(),
                            [](const auto& a, const auto& b) { return a.rel_error < b.rel_error; });
}

namespace {

struct Evaluation {
  double value = 0.0;
  std::uint64_t branches = 0;
};

Evaluation evaluate(const std::function<Tensor()>& f) {
  BranchMonitor monitor;
  auto scope = monitor.watch();
  const Tensor out = f();
  if (out.numel() != 1) throw DimensionError("gradcheck: f must return a single value");
  return Evaluation{out.item(), monitor.fingerprint()};
}

}  // namespace

GradCheckReport gradcheck(const std::function<Tensor()>& f, std::span<Tensor> params,
                          const GradCheckOptions& options) {
  for (const auto& p : params) {
    if (!p.requires_grad()) throw DimensionError("gradcheck: parameter without requires_grad");
  }
  const auto base = evaluate(f);
  const auto again = evaluate(f);
  if (base.value != again.value || base.branches != again.branches) {
    throw NumericalError("gradcheck: f is not deterministic");
  }

  GradTape tape;
  {
    auto guard = tape.record();
    const Tensor out = f();
    tape.backward(out);
  }
  std::vector<Tensor> analytic;
  for (const auto& p : params) analytic.push_back(tape.grad(p));
  tape.clear();

  auto rng = make_stream(options.seed, "gradcheck");
  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    std::vector<std::int64_t> indices(static_cast<std::size_t>(p.numel()));
    std::iota(indices.begin(), indices.end(), 0);
    if (options.max_checks_per_param > 0 &&
        static_cast<std::int64_t>(indices.size()) > options.max_checks_per_param) {
      std::shuffle(indices.begin(), indices.end(), rng);
      indices.resize(static_cast<std::size_t>(options.max_checks_per_param));
      std::sort(indices.begin(), indices.end());
    }
    auto values = p.mutable_data();
    for (auto idx : indices) {
      const double saved = values[idx];
      GradCheckEntry e;
      e.param = pi;
      e.index = idx;
      e.analytic = analytic[pi].data()[idx];
      e.eps = options.eps;
      for (int attempt = 0;; ++attempt) {
        values[idx] = saved + e.eps;
        const auto plus = evaluate(f);
        values[idx] = saved - e.eps;
        const auto minus = evaluate(f);
        values[idx] = saved;
        e.numeric = (plus.value - minus.value) / (2.0 * e.eps);
        e.branch_stable = plus.branches == base.branches && minus.branches == base.branches;
        if (e.branch_stable || attempt == options.max_step_refinements) break;
        if (attempt == 0) ++report.refined_probes;
        e.eps /= 10.0;
      }
      const double denom = std::max({std::abs(e.analytic), std::abs(e.numeric), options.denom_floor});
      e.rel_error = std::abs(e.analytic - e.numeric) / denom;
      report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
      report.entries.push_back(e);
    }
  }
  report.passed = report.max_rel_error < options.tol;
  return report;
}

}  // namespace lpnet
