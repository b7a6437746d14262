#include "lpnet/image_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "lpnet/errors.hpp"

namespace lpnet {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

// Netpbm-style header tokenizer: whitespace separated, '#' comments to end of line.
class HeaderReader {
 public:
  HeaderReader(const std::string& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

  std::string token() {
    skip_space_and_comments();
    const auto start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (start == pos_) throw IoError("malformed header in " + path_);
    return bytes_.substr(start, pos_ - start);
  }

  long long integer() {
    const auto t = token();
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(t, &used);
    } catch (const std::exception&) {
      throw IoError("malformed header value '" + t + "' in " + path_);
    }
    if (used != t.size()) throw IoError("malformed header value '" + t + "' in " + path_);
    return v;
  }

  double real() {
    const auto t = token();
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      throw IoError("malformed header value '" + t + "' in " + path_);
    }
    if (used != t.size()) throw IoError("malformed header value '" + t + "' in " + path_);
    return v;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw IoError("malformed header in " + path_);
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  const std::string& path_;
  std::size_t pos_ = 0;
};

}  // namespace

SparseDepth read_pgm16(const std::string& path) {
  const auto bytes = read_file(path);
  HeaderReader hdr(bytes, path);
  if (hdr.token() != "P5") throw IoError("not a binary PGM (P5): " + path);
  const auto w = hdr.integer();
  const auto h = hdr.integer();
  const auto maxval = hdr.integer();
  if (w < 1 || h < 1) throw IoError("invalid PGM dimensions in " + path);
  if (maxval != 65535) throw IoError("PGM maxval must be 65535 in " + path);
  const auto start = hdr.raster_start();
  const auto count = static_cast<std::size_t>(w * h);
  if (bytes.size() - start != 2 * count) throw IoError("PGM raster size mismatch in " + path);
  std::vector<double> depth(count), mask(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto hi = static_cast<unsigned char>(bytes[start + 2 * i]);
    const auto lo = static_cast<unsigned char>(bytes[start + 2 * i + 1]);
    const unsigned raw = (hi << 8) | lo;
    depth[i] = static_cast<double>(raw) / 256.0;
    mask[i] = raw == 0 ? 0.0 : 1.0;
  }
  return SparseDepth{Tensor({1, 1, h, w}, std::move(depth)), Tensor({1, 1, h, w}, std::move(mask))};
}

void write_pgm16(const std::string& path, const SparseDepth& s) {
  if (s.depth.rank() != 4 || s.depth.n() != 1 || s.depth.c() != 1) {
    throw DimensionError("write_pgm16: expected 1 x 1 x H x W, got " + shape_str(s.depth.shape()));
  }
  const auto h = s.depth.h(), w = s.depth.w();
  std::string bytes = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n65535\n";
  auto d = s.depth.data();
  auto m = s.mask.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    long raw = 0;
    if (m[i] != 0.0) {
      if (!std::isfinite(d[i])) throw NumericalError("write_pgm16: non-finite depth");
      raw = std::lround(d[i] * 256.0);
      if (raw < 0 || raw > 65535) throw IoError("write_pgm16: depth outside 16-bit range in " + path);
    }
    bytes.push_back(static_cast<char>((raw >> 8) & 0xff));
    bytes.push_back(static_cast<char>(raw & 0xff));
  }
  write_file(path, bytes);
}

void write_pgm16(const std::string& path, const Tensor& depth) {
  std::vector<double> d(depth.data().begin(), depth.data().end());
  std::vector<double> m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    m[i] = d[i] > 0.0 ? 1.0 : 0.0;
    if (m[i] == 0.0) d[i] = 0.0;
  }
  write_pgm16(path, SparseDepth{Tensor(depth.shape(), std::move(d)), Tensor(depth.shape(), std::move(m))});
}

Tensor read_pfm(const std::string& path) {
  const auto bytes = read_file(path);
  HeaderReader hdr(bytes, path);
  const auto magic = hdr.token();
  std::int64_t channels = 0;
  if (magic == "Pf") {
    channels = 1;
  } else if (magic == "PF") {
    channels = 3;
  } else {
    throw IoError("not a PFM file: " + path);
  }
  const auto w = hdr.integer();
  const auto h = hdr.integer();
  const double scale = hdr.real();
  if (w < 1 || h < 1 || scale == 0.0) throw IoError("invalid PFM header in " + path);
  const bool little = scale < 0.0;
  const auto start = hdr.raster_start();
  const auto count = static_cast<std::size_t>(w * h * channels);
  if (bytes.size() - start != 4 * count) throw IoError("PFM raster size mismatch in " + path);

  std::vector<double> data(count);
  const auto plane = static_cast<std::size_t>(w * h);
  for (std::int64_t row = 0; row < h; ++row) {
    const auto y = h - 1 - row;  // bottom-to-top
    for (std::int64_t x = 0; x < w; ++x) {
      for (std::int64_t c = 0; c < channels; ++c) {
        const auto src = start + 4 * static_cast<std::size_t>((row * w + x) * channels + c);
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b) {
          const auto byte = static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[src + b]));
          u |= little ? byte << (8 * b) : byte << (8 * (3 - b));
        }
        const float f = std::bit_cast<float>(u);
        data[static_cast<std::size_t>(c) * plane + static_cast<std::size_t>(y * w + x)] = f;
      }
    }
  }
  return Tensor({1, channels, h, w}, std::move(data));
}

void write_pfm(const std::string& path, const Tensor& image) {
  if (image.rank() != 4 || image.n() != 1 || (image.c() != 1 && image.c() != 3)) {
    throw DimensionError("write_pfm: expected 1 x {1,3} x H x W, got " + shape_str(image.shape()));
  }
  const auto channels = image.c(), h = image.h(), w = image.w();
  std::string bytes = std::string(channels == 1 ? "Pf" : "PF") + "\n" + std::to_string(w) + " " +
                      std::to_string(h) + "\n-1.0\n";
  auto d = image.data();
  const auto plane = static_cast<std::size_t>(w * h);
  for (std::int64_t row = 0; row < h; ++row) {
    const auto y = h - 1 - row;
    for (std::int64_t x = 0; x < w; ++x) {
      for (std::int64_t c = 0; c < channels; ++c) {
        const double v = d[static_cast<std::size_t>(c) * plane + static_cast<std::size_t>(y * w + x)];
        if (!std::isfinite(v)) throw NumericalError("write_pfm: non-finite value");
        if (std::abs(v) > std::numeric_limits<float>::max()) {
          throw NumericalError("write_pfm: value outside float32 range");
        }
        const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(v));
        for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((u >> (8 * b)) & 0xff));
      }
    }
  }
  write_file(path, bytes);
}

}  // namespace lpnet
