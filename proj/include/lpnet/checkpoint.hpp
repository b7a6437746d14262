#pragma once

#include <string>

#include "lpnet/network.hpp"

namespace lpnet {

inline constexpr char kCheckpointMagic[] = "LPNET1";

/// Binary layout, all integers little-endian:
///   "LPNET1" | u32 len, ArchConfig text | u32 tensor count |
///   per tensor: u32 len, name | u32 rank | u64 dims[rank] | f64 values
std::string serialize_checkpoint(LPNetModel& model);
LPNetModel deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, LPNetModel& model);
LPNetModel load_checkpoint(const std::string& path);

}  // namespace lpnet
