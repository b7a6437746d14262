#pragma once

#include <array>
#include <cstdint>
#include <variant>
#include <vector>

#include "lpnet/sparse_depth.hpp"
#include "lpnet/tensor.hpp"

namespace lpnet {

using Albedo = std::array<double, 3>;

// depth(u, v) = depth_at_origin + slope_x * u + slope_y * v, (u, v) pixel centers.
struct PlanePrimitive {
  double depth_at_origin = 8.0;
  double slope_x = 0.0;
  double slope_y = 0.0;
  Albedo albedo{0.6, 0.6, 0.6};
};

// Fronto-parallel box face covering [x0, x1) x [y0, y1) in pixels.
struct BoxPrimitive {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double depth = 4.0;
  Albedo albedo{0.8, 0.3, 0.3};
};

struct SpherePrimitive {
  double cx = 0, cy = 0;   // pixels
  double radius_px = 8.0;
  double center_depth = 5.0;  // meters
  Albedo albedo{0.3, 0.4, 0.8};
};

using Primitive = std::variant<PlanePrimitive, BoxPrimitive, SpherePrimitive>;

struct SceneSpec {
  std::uint64_t seed = 0;
  std::int64_t height = 64;
  std::int64_t width = 64;
  std::vector<Primitive> primitives;
  double min_depth = 0.5;
  double max_depth = 10.0;
  double meters_per_pixel = 0.05;
  std::int64_t sparse_sample_count = 200;
};

struct Scene {
  Tensor image;       // 1 x 3 x H x W in [0, 1]
  SparseDepth gt;     // dense: every pixel valid
  SparseDepth sparse;
};

/// Orthographic render: each pixel takes the nearest primitive surface,
/// clamped to [min_depth, max_depth]; uncovered pixels sit at max_depth. The
/// image is per-primitive albedo times Lambertian shading of the depth
/// gradient. Sparse depth is a seeded uniform sample of the ground truth.
Scene generate_scene(const SceneSpec& spec);

// Ground plane plus a few boxes and spheres, all drawn from `seed`.
SceneSpec random_scene_spec(std::uint64_t seed, std::int64_t height, std::int64_t width,
                            std::int64_t sparse_count);

}  // namespace lpnet
