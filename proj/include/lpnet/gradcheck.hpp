#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lpnet/tensor.hpp"

namespace lpnet {

struct GradCheckOptions {
  double eps = 1e-5;
  double tol = 1e-4;
  // Denominator floor for the relative error, so gradients that are zero up to
  // round-off are compared absolutely.
  double denom_floor = 1e-6;
  // Elements probed per parameter tensor; <= 0 probes every element.
  std::int64_t max_checks_per_param = 0;
  std::uint64_t seed = 0;
  // A probe whose +-eps evaluations take different branches of a
  // piecewise-smooth op than the base point is repeated with eps divided by
  // 10, at most this many times.
  int max_step_refinements = 3;
};

struct GradCheckEntry {
  std::size_t param = 0;
  std::int64_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
  double eps = 0.0;            // step actually used
  bool branch_stable = true;   // no kink between p - eps and p + eps
};

struct GradCheckReport {
  bool passed = false;
  double max_rel_error = 0.0;
  std::vector<GradCheckEntry> entries;
  std::int64_t refined_probes = 0;  // probes that needed a smaller step
  const GradCheckEntry* worst() const;
};

/// Compares reverse-mode gradients of the scalar `f` with central differences
/// (f(p + eps) - f(p - eps)) / (2 eps), perturbing parameters in place.
/// Probes that straddle a kink of leaky_relu, abs, the exp clamp or a
/// bilinear sampling cell are retried with a smaller step (see BranchMonitor).
///
/// `f` reads the current contents of `params`; every param must have
/// requires_grad set. Throws NumericalError if two evaluations at the same
/// point disagree (non-deterministic f).
GradCheckReport gradcheck(const std::function<Tensor()>& f, std::span<Tensor> params,
                          const GradCheckOptions& options = {});

}  // namespace lpnet
