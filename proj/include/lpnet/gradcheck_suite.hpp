#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lpnet/gradcheck.hpp"

namespace lpnet {

struct GradCheckCase {
  std::string name;
  std::vector<Tensor> params;
  std::function<Tensor()> f;
  GradCheckOptions options;
};

// Every differentiable primitive on at least three shapes. Each case reduces
// the op output to a scalar with a fixed random projection.
std::vector<GradCheckCase> primitive_gradcheck_cases(std::uint64_t seed);

// Full multi-scale loss of a small LP-Net on a 32 x 32 synthetic scene.
// Deformable offset convs are randomized so taps land between pixels.
// `checks_per_param` elements of each parameter tensor are probed.
GradCheckCase model_gradcheck_case(std::uint64_t seed, std::int64_t checks_per_param = 3);

struct SuiteOutcome {
  std::string name;
  GradCheckReport report;
};

std::vector<SuiteOutcome> run_gradcheck_suite(std::vector<GradCheckCase> cases);

}  // namespace lpnet
