#include "lpnet/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lpnet/errors.hpp"
#include "lpnet/rng.hpp"

namespace lpnet {

namespace {

struct Hit {
  double depth = std::numeric_limits<double>::infinity();
  Albedo albedo{0.5, 0.5, 0.5};
};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double surface_depth(const Primitive& prim, double u, double v, double mpp) {
  constexpr double kMiss = std::numeric_limits<double>::infinity();
  return std::visit(
      Overloaded{
          [&](const PlanePrimitive& p) { return p.depth_at_origin + p.slope_x * u + p.slope_y * v; },
          [&](const BoxPrimitive& b) { return (u >= b.x0 && u < b.x1 && v >= b.y0 && v < b.y1) ? b.depth : kMiss; },
          [&](const SpherePrimitive& s) {
            const double r = s.radius_px * mpp;
            const double dx = (u - s.cx) * mpp, dy = (v - s.cy) * mpp;
            const double d2 = dx * dx + dy * dy;
            return d2 < r * r ? s.center_depth - std::sqrt(r * r - d2) : kMiss;
          }},
      prim);
}

const Albedo& albedo_of(const Primitive& prim) {
  return std::visit([](const auto& p) -> const Albedo& { return p.albedo; }, prim);
}

}  // namespace

Scene generate_scene(const SceneSpec& spec) {
  if (spec.primitives.empty()) throw DimensionError("generate_scene: no primitives");
  if (spec.height < 1 || spec.width < 1) throw DimensionError("generate_scene: empty resolution");
  if (!(spec.min_depth > 0.0 && spec.max_depth > spec.min_depth)) {
    throw DimensionError("generate_scene: invalid depth range");
  }
  const auto h = spec.height, w = spec.width, plane = h * w;
  if (spec.sparse_sample_count < 0 || spec.sparse_sample_count > plane) {
    throw DimensionError("generate_scene: sparse sample count out of range");
  }

  std::vector<double> depth(static_cast<std::size_t>(plane));
  std::vector<Albedo> albedo(static_cast<std::size_t>(plane), Albedo{0.5, 0.5, 0.5});
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      const double u = static_cast<double>(x) + 0.5, v = static_cast<double>(y) + 0.5;
      Hit hit;
      for (const auto& prim : spec.primitives) {
        const double d = surface_depth(prim, u, v, spec.meters_per_pixel);
        if (d < hit.depth) {
          hit.depth = d;
          hit.albedo = albedo_of(prim);
        }
      }
      const auto i = static_cast<std::size_t>(y * w + x);
      depth[i] = std::isfinite(hit.depth) ? std::clamp(hit.depth, spec.min_depth, spec.max_depth)
                                          : spec.max_depth;
      albedo[i] = hit.albedo;
    }
  }

  // Lambertian shading from the depth gradient (one-sided at the border).
  const double lx = 0.4, ly = -0.5, lz = 0.77;
  const double lnorm = std::sqrt(lx * lx + ly * ly + lz * lz);
  std::vector<double> image(static_cast<std::size_t>(3 * plane));
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      auto at = [&](std::int64_t yy, std::int64_t xx) {
        return depth[static_cast<std::size_t>(std::clamp<std::int64_t>(yy, 0, h - 1) * w +
                                              std::clamp<std::int64_t>(xx, 0, w - 1))];
      };
      const double gx = (at(y, x + 1) - at(y, x - 1)) / (2.0 * spec.meters_per_pixel);
      const double gy = (at(y + 1, x) - at(y - 1, x)) / (2.0 * spec.meters_per_pixel);
      const double nnorm = std::sqrt(gx * gx + gy * gy + 1.0);
      const double lambert = std::max(0.0, (-gx * lx - gy * ly + lz) / (nnorm * lnorm));
      const double shade = 0.25 + 0.75 * lambert;
      const auto i = static_cast<std::size_t>(y * w + x);
      for (std::size_t c = 0; c < 3; ++c) {
        image[c * static_cast<std::size_t>(plane) + i] = std::clamp(albedo[i][c] * shade, 0.0, 1.0);
      }
    }
  }

  Scene scene;
  scene.image = Tensor({1, 3, h, w}, std::move(image));
  scene.gt = SparseDepth{Tensor({1, 1, h, w}, depth), Tensor::full({1, 1, h, w}, 1.0)};

  std::vector<std::size_t> order(static_cast<std::size_t>(plane));
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_stream(spec.seed, "sampling");
  const auto count = static_cast<std::size_t>(spec.sparse_sample_count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<double> sparse(static_cast<std::size_t>(plane), 0.0);
  std::vector<double> mask(static_cast<std::size_t>(plane), 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    sparse[order[i]] = depth[order[i]];
    mask[order[i]] = 1.0;
  }
  scene.sparse = SparseDepth{Tensor({1, 1, h, w}, std::move(sparse)), Tensor({1, 1, h, w}, std::move(mask))};
  return scene;
}

SceneSpec random_scene_spec(std::uint64_t seed, std::int64_t height, std::int64_t width,
                            std::int64_t sparse_count) {
  auto rng = make_stream(seed, "scene");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto color = [&]() { return Albedo{uniform(0.2, 1.0), uniform(0.2, 1.0), uniform(0.2, 1.0)}; };
  const auto h = static_cast<double>(height), w = static_cast<double>(width);

  SceneSpec spec;
  spec.seed = seed;
  spec.height = height;
  spec.width = width;
  spec.sparse_sample_count = sparse_count;
  spec.meters_per_pixel = 3.2 / w;

  // Ground plane receding toward the top of the frame.
  PlanePrimitive ground;
  ground.depth_at_origin = uniform(7.5, 9.5);
  ground.slope_y = -uniform(2.5, 4.5) / h;
  ground.slope_x = uniform(-1.0, 1.0) / w;
  ground.albedo = color();
  spec.primitives.emplace_back(ground);

  const int boxes = 1 + static_cast<int>(unit(rng) * 3.0);
  for (int i = 0; i < boxes; ++i) {
    BoxPrimitive b;
    const double bw = uniform(0.15, 0.4) * w, bh = uniform(0.15, 0.4) * h;
    b.x0 = uniform(0.0, w - bw);
    b.y0 = uniform(0.0, h - bh);
    b.x1 = b.x0 + bw;
    b.y1 = b.y0 + bh;
    b.depth = uniform(2.5, 5.5);
    b.albedo = color();
    spec.primitives.emplace_back(b);
  }
  const int spheres = 1 + static_cast<int>(unit(rng) * 2.0);
  for (int i = 0; i < spheres; ++i) {
    SpherePrimitive s;
    s.radius_px = uniform(0.1, 0.25) * std::min(h, w);
    s.cx = uniform(s.radius_px, w - s.radius_px);
    s.cy = uniform(s.radius_px, h - s.radius_px);
    s.center_depth = uniform(3.0, 6.0);
    s.albedo = color();
    spec.primitives.emplace_back(s);
  }
  return spec;
}

}  // namespace lpnet
