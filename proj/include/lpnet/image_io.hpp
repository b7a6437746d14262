#pragma once

#include <string>

#include "lpnet/sparse_depth.hpp"
#include "lpnet/tensor.hpp"

namespace lpnet {

// 16-bit binary PGM (P5, maxval 65535, big-endian samples) with the KITTI
// depth convention depth_m = raw / 256, raw 0 = invalid.
SparseDepth read_pgm16(const std::string& path);
// Pixels with mask 0 are written as 0; depth is rounded to the nearest 1/256 m.
void write_pgm16(const std::string& path, const SparseDepth& depth);
// Dense depth; values <= 0 become invalid.
void write_pgm16(const std::string& path, const Tensor& depth);

// PFM: "Pf" (1 x 1 x H x W) or "PF" (1 x 3 x H x W), little-endian float32,
// rows stored bottom to top. Writing rejects non-finite values.
Tensor read_pfm(const std::string& path);
void write_pfm(const std::string& path, const Tensor& image);

}  // namespace lpnet
