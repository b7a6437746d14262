#include "lpnet/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "lpnet/errors.hpp"
#include "lpnet/text.hpp"

namespace lpnet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long long parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
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

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("invalid boolean for " + key + ": " + value);
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::istringstream is(value);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

const std::set<std::string>& arch_keys() {
  static const std::set<std::string> keys{"base_channels", "multipliers", "mfp_paths",
                                          "sdf_kernel",    "image_channels", "leaky_slope"};
  return keys;
}

template <typename T>
std::string join(const T& values) {
  std::ostringstream os;
  for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << format_number(values[i]);
  return os.str();
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, value).second) throw ConfigError("duplicate key: " + key);
  }
  return kv;
}

void RunConfig::validate() const {
  arch.validate();
  if (height < 16 || width < 16 || height % 16 != 0 || width % 16 != 0) {
    throw ConfigError("height and width must be positive multiples of 16");
  }
  const std::int64_t deepest = std::int64_t{1} << arch.mfp_paths;
  if (height / 16 < deepest || width / 16 < deepest) {
    throw ConfigError("mfp_paths " + std::to_string(arch.mfp_paths) + " needs height and width >= " +
                      std::to_string(16 * deepest));
  }
  if (train_scenes < 1) throw ConfigError("train_scenes must be >= 1");
  if (heldout_scenes < 1) throw ConfigError("heldout_scenes must be >= 1");
  if (sparse_count < 1 || sparse_count > height * width) {
    throw ConfigError("sparse_count must be in 1..height*width");
  }
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  for (double w : scale_weights) {
    if (!(w >= 0.0)) throw ConfigError("scale_weights must be non-negative");
  }
  for (double f : sparsity_fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("sparsity_fractions must lie in (0, 1]");
  }
  if (timing_repeats < 1) throw ConfigError("timing_repeats must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << arch.to_text();
  os << "seed = " << seed << '\n';
  os << "height = " << height << '\n';
  os << "width = " << width << '\n';
  os << "train_scenes = " << train_scenes << '\n';
  os << "heldout_scenes = " << heldout_scenes << '\n';
  os << "sparse_count = " << sparse_count << '\n';
  os << "lr = " << format_number(lr) << '\n';
  os << "steps = " << steps << '\n';
  os << "batch_size = " << batch_size << '\n';
  os << "flip_augmentation = " << (flip_augmentation ? "true" : "false") << '\n';
  os << "scale_weights = " << join(scale_weights) << '\n';
  os << "sparsity_fractions = " << join(sparsity_fractions) << '\n';
  os << "timing_repeats = " << timing_repeats << '\n';
  os << "output_dir = " << output_dir << '\n';
  return os.str();
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig c;
  std::map<std::string, std::string> arch_kv;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (arch_keys().contains(key)) {
      arch_kv.emplace(key, value);
    } else if (key == "seed") {
      const auto v = parse_int(key, value);
      if (v < 0) throw ConfigError("seed must be non-negative");
      c.seed = static_cast<std::uint64_t>(v);
    } else if (key == "height") {
      c.height = parse_int(key, value);
    } else if (key == "width") {
      c.width = parse_int(key, value);
    } else if (key == "train_scenes") {
      c.train_scenes = static_cast<int>(parse_int(key, value));
    } else if (key == "heldout_scenes") {
      c.heldout_scenes = static_cast<int>(parse_int(key, value));
    } else if (key == "sparse_count") {
      c.sparse_count = parse_int(key, value);
    } else if (key == "lr") {
      c.lr = parse_double(key, value);
    } else if (key == "steps") {
      c.steps = static_cast<int>(parse_int(key, value));
    } else if (key == "batch_size") {
      c.batch_size = static_cast<int>(parse_int(key, value));
    } else if (key == "flip_augmentation") {
      c.flip_augmentation = parse_bool(key, value);
    } else if (key == "scale_weights") {
      const auto w = parse_list(key, value);
      if (w.size() != c.scale_weights.size()) throw ConfigError("scale_weights needs exactly 5 values");
      std::copy(w.begin(), w.end(), c.scale_weights.begin());
    } else if (key == "sparsity_fractions") {
      c.sparsity_fractions = parse_list(key, value);
    } else if (key == "timing_repeats") {
      c.timing_repeats = static_cast<int>(parse_int(key, value));
    } else if (key == "output_dir") {
      c.output_dir = value;
    } else {
      throw ConfigError("unknown key: " + key);
    }
  }
  c.arch = ArchConfig::from_map(arch_kv, c.arch);
  c.validate();
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

}  // namespace lpnet
