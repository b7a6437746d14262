#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lpnet/fusion.hpp"
#include "lpnet/layers.hpp"
#include "lpnet/mfp.hpp"
#include "lpnet/sdf.hpp"
#include "lpnet/sparse_depth.hpp"

namespace lpnet {

inline constexpr int kScales = 5;  // 1/1 .. 1/16

struct ArchConfig {
  int base_channels = 16;
  std::array<int, kScales> multipliers{1, 2, 4, 8, 8};
  int mfp_paths = 4;
  int sdf_kernel = 3;
  int image_channels = 3;
  double leaky_slope = 0.1;

  std::int64_t channels(int scale) const;
  void validate() const;

  // "key = value" lines, in a fixed key order.
  std::string to_text() const;
  // Keys absent from `kv` keep their value in `base`.
  static ArchConfig from_map(const std::map<std::string, std::string>& kv, const ArchConfig& base);
  static ArchConfig from_map(const std::map<std::string, std::string>& kv);
};

/// One modality encoder: conv + residual block at full resolution, then two
/// residual blocks per coarser scale, the first with stride 2.
struct Encoder {
  Conv2d stem;
  ResidualBlock stem_block;
  std::array<std::array<ResidualBlock, 2>, kScales - 1> stages;

  static Encoder create(const ArchConfig& arch, std::int64_t in_channels, std::mt19937_64& rng);
  std::vector<Tensor> operator()(const Tensor& x, double slope) const;
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

// Upsamples decoder features from scale i + 1 to scale i.
struct DecoderStage {
  ConvTranspose2d upsample;
  Conv2d reduce;  // cat(upsampled, skip) -> channels(i)
  ResidualBlock refine;

  void visit(const std::string& prefix, const ParamVisitor& fn);
};

struct LPNetModel {
  ArchConfig arch;
  Encoder image_encoder;
  Encoder depth_encoder;
  std::array<Conv2d, kScales> modality_fusion;  // 1x1, 2c -> c
  MFPParams mfp;
  std::array<DecoderStage, kScales - 1> decoder;  // index = target scale
  Conv2d regression;
  std::array<ConfidenceHead, kScales> confidence;
  std::array<SDFParams, kScales - 1> sdf;  // index = scale 0..3
  PoolingParams pooling;

  static LPNetModel create(const ArchConfig& arch, std::uint64_t seed);

  // Visits every parameter in a fixed order with a stable dotted name.
  void visit(const ParamVisitor& fn);
  std::vector<Tensor> parameters();
  std::int64_t parameter_count();
};

// Fused per-scale encoder features F_e^0 .. F_e^4 (index = scale).
struct EncoderFeatures {
  std::array<Tensor, kScales> fused;
};

EncoderFeatures encode(const Tensor& image, const SparseDepth& s, const LPNetModel& model);

/// Decoder features computed on demand from the coarsest scale down, so an
/// early exit never pays for finer decoder stages.
class LazyDecoder {
 public:
  LazyDecoder(const EncoderFeatures& features, const LPNetModel& model);
  // F_d^scale; computes coarser stages first if needed.
  const Tensor& at(int scale);

 private:
  const EncoderFeatures& features_;
  const LPNetModel& model_;
  std::array<Tensor, kScales> decoded_;
};

// F_d^4 .. F_d^0 (index = scale), MFP applied at the bottleneck.
std::array<Tensor, kScales> decode(const EncoderFeatures& features, const LPNetModel& model);

// Coarse depth at 1/16 scale: softplus(conv3x3(f_d4)).
Tensor regression_head(const Tensor& f_d4, const LPNetModel& model);

/// Intermediates of the five-step coarse-to-fine prediction. Arrays are
/// indexed by scale; entries finer than the last computed step are undefined.
struct DepthPyramid {
  std::array<Tensor, kScales> predictions;  // D^(i)
  std::array<Tensor, kScales> coarse;       // D'^(i) before fusion
  std::array<Tensor, kScales> confidences;  // c_i
  std::array<Tensor, kScales> selections;   // SDF selection map (scales 0..3)
  PooledPyramid sparse;
  int steps = 0;

  int finest_scale() const { return kScales - steps; }
  const Tensor& finest() const { return predictions[static_cast<std::size_t>(finest_scale())]; }
};

// Runs the first `steps` (1..5) progressive steps.
DepthPyramid progressive_predict(const Tensor& image, const SparseDepth& s, const LPNetModel& model,
                                 int steps = kScales);

// Last computed prediction bilinearly resized to the input resolution.
Tensor infer_steps(const Tensor& image, const SparseDepth& s, const LPNetModel& model, int steps);

}  // namespace lpnet
