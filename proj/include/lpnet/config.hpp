#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lpnet/network.hpp"

namespace lpnet {

// Parses "key = value" lines; '#' starts a comment. Duplicate keys and lines
// without '=' are ConfigErrors.
std::map<std::string, std::string> parse_key_values(const std::string& text);

struct RunConfig {
  // Desk-scale defaults: 64x64 scenes leave a 4x4 bottleneck, which fits two MFP paths.
  ArchConfig arch{.base_channels = 8, .mfp_paths = 2};
  std::uint64_t seed = 0;
  std::int64_t height = 64;
  std::int64_t width = 64;
  int train_scenes = 16;
  int heldout_scenes = 8;
  std::int64_t sparse_count = 200;
  double lr = 1e-3;
  int steps = 300;
  int batch_size = 4;
  bool flip_augmentation = true;
  std::array<double, kScales> scale_weights{1, 1, 1, 1, 1};
  std::vector<double> sparsity_fractions{0.4, 0.6, 0.8, 1.0};
  int timing_repeats = 5;
  std::string output_dir = "out";

  // Throws ConfigError on the first violated constraint.
  void validate() const;
  // Every key with its resolved value, in a fixed order; parses back to the same config.
  std::string to_text() const;

  static RunConfig from_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
};

}  // namespace lpnet
