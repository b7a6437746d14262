#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lpnet {

// Derives an independent seed for a named purpose ("init", "sampling",
// "augmentation", ...) from one root seed.
std::uint64_t stream_seed(std::uint64_t root, std::string_view purpose);

inline std::mt19937_64 make_stream(std::uint64_t root, std::string_view purpose) {
  return std::mt19937_64(stream_seed(root, purpose));
}

}  // namespace lpnet
