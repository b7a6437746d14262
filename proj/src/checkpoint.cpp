#include "lpnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lpnet/config.hpp"
#include "lpnet/errors.hpp"

namespace lpnet {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw IoError("checkpoint truncated");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(LPNetModel& model) {
  std::string out(kCheckpointMagic);
  const auto arch = model.arch.to_text();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.size()));
  out += arch;

  std::vector<std::pair<std::string, Tensor>> named;
  model.visit([&](const std::string& name, Tensor& t) { named.emplace_back(name, t); });
  put<std::uint32_t>(out, static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, t] : named) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    for (double v : t.data()) put<double>(out, v);
  }
  return out;
}

LPNetModel deserialize_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.get_string(std::strlen(kCheckpointMagic)) != kCheckpointMagic) {
    throw IoError("not an LPNET1 checkpoint");
  }
  const auto arch_len = in.get<std::uint32_t>();
  ArchConfig arch;
  try {
    arch = ArchConfig::from_map(parse_key_values(in.get_string(arch_len)));
  } catch (const ConfigError& e) {
    throw IoError(std::string("checkpoint architecture block: ") + e.what());
  }
  auto model = LPNetModel::create(arch, 0);

  std::vector<std::pair<std::string, Tensor>> named;
  model.visit([&](const std::string& name, Tensor& t) { named.emplace_back(name, t); });
  const auto count = in.get<std::uint32_t>();
  if (count != named.size()) {
    throw IoError("checkpoint holds " + std::to_string(count) + " tensors, model expects " +
                  std::to_string(named.size()));
  }
  for (auto& [name, t] : named) {
    const auto stored = in.get_string(in.get<std::uint32_t>());
    if (stored != name) throw IoError("checkpoint tensor '" + stored + "' where '" + name + "' expected");
    const auto rank = in.get<std::uint32_t>();
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<std::int64_t>(in.get<std::uint64_t>()));
    if (shape != t.shape()) {
      throw IoError("checkpoint tensor '" + name + "' has shape " + shape_str(shape) + ", expected " +
                    shape_str(t.shape()));
    }
    auto dst = t.mutable_data();
    for (auto& v : dst) v = in.get<double>();
  }
  if (!in.done()) throw IoError("trailing bytes after checkpoint payload");
  return model;
}

void save_checkpoint(const std::string& path, LPNetModel& model) {
  const auto bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

LPNetModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace lpnet
