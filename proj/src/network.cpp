#include "lpnet/network.hpp"

#include <sstream>

#include "lpnet/errors.hpp"
#include "lpnet/ops.hpp"
#include "lpnet/rng.hpp"
#include "lpnet/text.hpp"

namespace lpnet {

std::int64_t ArchConfig::channels(int scale) const {
  return static_cast<std::int64_t>(base_channels) * multipliers.at(static_cast<std::size_t>(scale));
}

void ArchConfig::validate() const {
  if (base_channels < 1) throw ConfigError("base_channels must be >= 1");
  for (int m : multipliers) {
    if (m < 1) throw ConfigError("channel multipliers must be >= 1");
  }
  if (mfp_paths < 1 || mfp_paths > 4) throw ConfigError("mfp_paths must be in 1..4");
  if (channels(kScales - 1) % mfp_paths != 0) {
    throw ConfigError("bottleneck channels " + std::to_string(channels(kScales - 1)) +
                      " not divisible by mfp_paths " + std::to_string(mfp_paths));
  }
  if (sdf_kernel != 3 && sdf_kernel != 5) throw ConfigError("sdf_kernel must be 3 or 5");
  if (image_channels < 1) throw ConfigError("image_channels must be >= 1");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope must be in [0, 1)");
}

std::string ArchConfig::to_text() const {
  std::ostringstream os;
  os << "base_channels = " << base_channels << '\n';
  os << "multipliers = ";
  for (std::size_t i = 0; i < multipliers.size(); ++i) os << (i ? "," : "") << multipliers[i];
  os << '\n';
  os << "mfp_paths = " << mfp_paths << '\n';
  os << "sdf_kernel = " << sdf_kernel << '\n';
  os << "image_channels = " << image_channels << '\n';
  os << "leaky_slope = " << format_number(leaky_slope) << '\n';
  return os.str();
}

namespace {

int parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw ConfigError("invalid integer for " + key + ": " + value);
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw ConfigError("invalid number for " + key + ": " + value);
  return v;
}

}  // namespace

ArchConfig ArchConfig::from_map(const std::map<std::string, std::string>& kv) { return from_map(kv, ArchConfig{}); }

ArchConfig ArchConfig::from_map(const std::map<std::string, std::string>& kv, const ArchConfig& base) {
  ArchConfig a = base;
  for (const auto& [key, value] : kv) {
    if (key == "base_channels") {
      a.base_channels = parse_int(key, value);
    } else if (key == "multipliers") {
      std::istringstream is(value);
      std::string item;
      std::size_t i = 0;
      while (std::getline(is, item, ',')) {
        if (i >= a.multipliers.size()) throw ConfigError("multipliers needs exactly 5 values");
        a.multipliers[i++] = parse_int(key, item);
      }
      if (i != a.multipliers.size()) throw ConfigError("multipliers needs exactly 5 values");
    } else if (key == "mfp_paths") {
      a.mfp_paths = parse_int(key, value);
    } else if (key == "sdf_kernel") {
      a.sdf_kernel = parse_int(key, value);
    } else if (key == "image_channels") {
      a.image_channels = parse_int(key, value);
    } else if (key == "leaky_slope") {
      a.leaky_slope = parse_double(key, value);
    } else {
      throw ConfigError("unknown architecture key: " + key);
    }
  }
  a.validate();
  return a;
}

Encoder Encoder::create(const ArchConfig& arch, std::int64_t in_channels, std::mt19937_64& rng) {
  Encoder e;
  const double slope = arch.leaky_slope;
  e.stem = Conv2d::create(in_channels, arch.channels(0), 3, 1, rng);
  e.stem_block = ResidualBlock::create(arch.channels(0), arch.channels(0), 1, slope, rng);
  for (int s = 1; s < kScales; ++s) {
    auto& stage = e.stages[static_cast<std::size_t>(s - 1)];
    stage[0] = ResidualBlock::create(arch.channels(s - 1), arch.channels(s), 2, slope, rng);
    stage[1] = ResidualBlock::create(arch.channels(s), arch.channels(s), 1, slope, rng);
  }
  return e;
}

std::vector<Tensor> Encoder::operator()(const Tensor& x, double slope) const {
  std::vector<Tensor> feats;
  Tensor f = stem_block(ops::leaky_relu(stem(x), slope));
  feats.push_back(f);
  for (const auto& stage : stages) {
    f = stage[1](stage[0](f));
    feats.push_back(f);
  }
  return feats;
}

void Encoder::visit(const std::string& prefix, const ParamVisitor& fn) {
  stem.visit(prefix + ".stem", fn);
  stem_block.visit(prefix + ".stem_block", fn);
  for (std::size_t s = 0; s < stages.size(); ++s) {
    stages[s][0].visit(prefix + ".scale" + std::to_string(s + 1) + ".block0", fn);
    stages[s][1].visit(prefix + ".scale" + std::to_string(s + 1) + ".block1", fn);
  }
}

void DecoderStage::visit(const std::string& prefix, const ParamVisitor& fn) {
  upsample.visit(prefix + ".upsample", fn);
  reduce.visit(prefix + ".reduce", fn);
  refine.visit(prefix + ".refine", fn);
}

LPNetModel LPNetModel::create(const ArchConfig& arch, std::uint64_t seed) {
  arch.validate();
  auto rng = make_stream(seed, "init");
  LPNetModel m;
  m.arch = arch;
  const double slope = arch.leaky_slope;
  m.image_encoder = Encoder::create(arch, arch.image_channels, rng);
  m.depth_encoder = Encoder::create(arch, 2, rng);
  for (int s = 0; s < kScales; ++s) {
    m.modality_fusion[static_cast<std::size_t>(s)] =
        Conv2d::create(2 * arch.channels(s), arch.channels(s), 1, 1, rng);
  }
  m.mfp = MFPParams::create(arch.channels(kScales - 1), arch.mfp_paths, slope, rng);
  for (int s = 0; s < kScales - 1; ++s) {
    auto& stage = m.decoder[static_cast<std::size_t>(s)];
    stage.upsample = ConvTranspose2d::create(arch.channels(s + 1), arch.channels(s), rng);
    stage.reduce = Conv2d::create(2 * arch.channels(s), arch.channels(s), 3, 1, rng);
    stage.refine = ResidualBlock::create(arch.channels(s), arch.channels(s), 1, slope, rng);
  }
  m.regression = Conv2d::create(arch.channels(kScales - 1), 1, 3, 1, rng);
  for (int s = 0; s < kScales; ++s) {
    m.confidence[static_cast<std::size_t>(s)] = ConfidenceHead::create(arch.channels(s), rng);
  }
  for (int s = 0; s < kScales - 1; ++s) {
    m.sdf[static_cast<std::size_t>(s)] = SDFParams::create(arch.channels(s), arch.sdf_kernel, rng);
  }
  m.pooling = PoolingParams::create(rng);
  return m;
}

void LPNetModel::visit(const ParamVisitor& fn) {
  image_encoder.visit("encoder_image", fn);
  depth_encoder.visit("encoder_depth", fn);
  for (std::size_t s = 0; s < modality_fusion.size(); ++s) {
    modality_fusion[s].visit("fusion.scale" + std::to_string(s), fn);
  }
  mfp.visit("mfp", fn);
  for (std::size_t s = 0; s < decoder.size(); ++s) decoder[s].visit("decoder.scale" + std::to_string(s), fn);
  regression.visit("regression", fn);
  for (std::size_t s = 0; s < confidence.size(); ++s) {
    confidence[s].visit("confidence.scale" + std::to_string(s), fn);
  }
  for (std::size_t s = 0; s < sdf.size(); ++s) sdf[s].visit("sdf.scale" + std::to_string(s), fn);
  pooling.visit("pooling", fn);
}

std::vector<Tensor> LPNetModel::parameters() {
  std::vector<Tensor> out;
  visit([&](const std::string&, Tensor& t) { out.push_back(t); });
  return out;
}

std::int64_t LPNetModel::parameter_count() {
  std::int64_t total = 0;
  visit([&](const std::string&, Tensor& t) { total += t.numel(); });
  return total;
}

namespace {

void check_inputs(const Tensor& image, const SparseDepth& s, const LPNetModel& model) {
  if (image.rank() != 4 || image.c() != model.arch.image_channels) {
    throw DimensionError("image must be N x " + std::to_string(model.arch.image_channels) +
                         " x H x W, got " + shape_str(image.shape()));
  }
  if (s.depth.rank() != 4 || s.depth.n() != image.n() || s.depth.h() != image.h() ||
      s.depth.w() != image.w()) {
    throw DimensionError("sparse depth " + shape_str(s.depth.shape()) + " does not match image " +
                         shape_str(image.shape()));
  }
  if (image.h() % 16 != 0 || image.w() % 16 != 0) {
    throw DimensionError("input resolution must be divisible by 16, got " + shape_str(image.shape()));
  }
}

}  // namespace

EncoderFeatures encode(const Tensor& image, const SparseDepth& s, const LPNetModel& model) {
  check_inputs(image, s, model);
  const double slope = model.arch.leaky_slope;
  const auto img = model.image_encoder(image, slope);
  const Tensor depth_in[] = {s.depth, s.mask};
  const auto dep = model.depth_encoder(ops::concat_channels(depth_in), slope);
  EncoderFeatures out;
  for (std::size_t i = 0; i < kScales; ++i) {
    const Tensor pair[] = {img[i], dep[i]};
    out.fused[i] = model.modality_fusion[i](ops::concat_channels(pair));
  }
  return out;
}

LazyDecoder::LazyDecoder(const EncoderFeatures& features, const LPNetModel& model)
    : features_(features), model_(model) {}

const Tensor& LazyDecoder::at(int scale) {
  if (scale < 0 || scale >= kScales) throw DimensionError("decoder scale out of range");
  auto& slot = decoded_[static_cast<std::size_t>(scale)];
  if (slot.defined()) return slot;
  if (scale == kScales - 1) {
    slot = mfp_forward(features_.fused[kScales - 1], model_.mfp);
    return slot;
  }
  const Tensor& coarser = at(scale + 1);
  const auto& stage = model_.decoder[static_cast<std::size_t>(scale)];
  const double slope = model_.arch.leaky_slope;
  const Tensor up = ops::leaky_relu(stage.upsample(coarser), slope);
  const Tensor parts[] = {up, features_.fused[static_cast<std::size_t>(scale)]};
  slot = stage.refine(ops::leaky_relu(stage.reduce(ops::concat_channels(parts)), slope));
  return slot;
}

std::array<Tensor, kScales> decode(const EncoderFeatures& features, const LPNetModel& model) {
  LazyDecoder dec(features, model);
  std::array<Tensor, kScales> out;
  for (int s = kScales - 1; s >= 0; --s) out[static_cast<std::size_t>(s)] = dec.at(s);
  return out;
}

Tensor regression_head(const Tensor& f_d4, const LPNetModel& model) {
  return ops::softplus(model.regression(f_d4));
}

DepthPyramid progressive_predict(const Tensor& image, const SparseDepth& s, const LPNetModel& model,
                                 int steps) {
  if (steps < 1 || steps > kScales) throw DimensionError("steps must be in 1..5");
  DepthPyramid pyr;
  pyr.steps = steps;
  pyr.sparse = build_pyramid(s, model.pooling);
  const auto features = encode(image, s, model);
  LazyDecoder dec(features, model);

  constexpr auto top = static_cast<std::size_t>(kScales - 1);
  const Tensor& f4 = dec.at(kScales - 1);
  pyr.coarse[top] = regression_head(f4, model);
  pyr.confidences[top] = estimate_confidence(f4, pyr.sparse.levels[top], model.confidence[top]);
  pyr.predictions[top] = fuse_depth(pyr.coarse[top], pyr.sparse.levels[top], pyr.confidences[top]);

  for (int scale = kScales - 2; scale >= kScales - steps; --scale) {
    const auto i = static_cast<std::size_t>(scale);
    const Tensor& f = dec.at(scale);
    const Tensor& prev = pyr.predictions[i + 1];
    pyr.coarse[i] = ops::bilinear_resize(prev, 2 * prev.h(), 2 * prev.w());
    pyr.confidences[i] = estimate_confidence(f, pyr.sparse.levels[i], model.confidence[i]);
    const Tensor fused = fuse_depth(pyr.coarse[i], pyr.sparse.levels[i], pyr.confidences[i]);
    auto refined = sdf_forward(fused, f, model.sdf[i]);
    pyr.predictions[i] = refined.output;
    pyr.selections[i] = refined.selection;
  }
  return pyr;
}

Tensor infer_steps(const Tensor& image, const SparseDepth& s, const LPNetModel& model, int steps) {
  const auto pyr = progressive_predict(image, s, model, steps);
  return ops::bilinear_resize(pyr.finest(), image.h(), image.w());
}

}  // namespace lpnet
