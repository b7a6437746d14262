#include "lpnet/gradcheck_suite.hpp"

#include <memory>
#include <random>

#include "lpnet/loss.hpp"
#include "lpnet/network.hpp"
#include "lpnet/ops.hpp"
#include "lpnet/rng.hpp"
#include "lpnet/scene.hpp"

namespace lpnet {

namespace {

class CaseBuilder {
 public:
  explicit CaseBuilder(std::uint64_t seed) : rng_(make_stream(seed, "gradcheck")) {}

  // Uniform in [lo, hi), marked as a gradcheck parameter.
  Tensor param(Shape shape, double lo = -1.0, double hi = 1.0) {
    auto t = uniform(std::move(shape), lo, hi);
    t.set_requires_grad(true);
    return t;
  }

  // Magnitudes in [lo, hi) with random sign: keeps kinks at 0 out of reach.
  Tensor param_away_from_zero(Shape shape, double lo = 0.1, double hi = 1.0) {
    auto t = uniform(std::move(shape), lo, hi);
    std::bernoulli_distribution sign(0.5);
    for (auto& v : t.mutable_data()) v = sign(rng_) ? v : -v;
    t.set_requires_grad(true);
    return t;
  }

  Tensor uniform(Shape shape, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& x : v) x = dist(rng_);
    return Tensor(std::move(shape), std::move(v));
  }

  // sum(out * R) for a fixed random R drawn on the first call.
  std::function<Tensor()> project(std::function<Tensor()> op) {
    auto probe = std::make_shared<Tensor>();
    auto rng = std::make_shared<std::mt19937_64>(rng_());
    return [op = std::move(op), probe, rng]() {
      auto out = op();
      if (!probe->defined() || probe->shape() != out.shape()) {
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        std::vector<double> v(static_cast<std::size_t>(out.numel()));
        for (auto& x : v) x = dist(*rng);
        *probe = Tensor(out.shape(), std::move(v));
      }
      return ops::sum(ops::mul(out, *probe));
    };
  }

  void add(std::vector<GradCheckCase>& cases, std::string name, std::vector<Tensor> params,
           std::function<Tensor()> op) {
    cases.push_back(GradCheckCase{std::move(name), std::move(params), project(std::move(op)), {}});
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Sample coordinates strictly inside cells (fractional part in [0.1, 0.9]) or
// well outside the image, so no finite-difference probe crosses a cell edge.
Tensor sample_coords(CaseBuilder& b, std::int64_t n, std::int64_t h, std::int64_t w, std::int64_t ho,
                     std::int64_t wo) {
  std::uniform_real_distribution<double> frac(0.1, 0.9);
  std::uniform_int_distribution<int> outside(0, 9);
  std::vector<double> v(static_cast<std::size_t>(n * 2 * ho * wo));
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t axis = 0; axis < 2; ++axis) {
      const auto extent = axis == 0 ? h : w;
      std::uniform_int_distribution<std::int64_t> cell(0, extent - 2);
      for (std::int64_t p = 0; p < ho * wo; ++p) {
        double c = static_cast<double>(cell(b.rng())) + frac(b.rng());
        const int o = outside(b.rng());
        if (o == 0) c = -1.0 - frac(b.rng());
        if (o == 1) c = static_cast<double>(extent) + frac(b.rng());
        v[static_cast<std::size_t>((i * 2 + axis) * ho * wo + p)] = c;
      }
    }
  }
  Tensor t({n, 2, ho, wo}, std::move(v));
  t.set_requires_grad(true);
  return t;
}

}  // namespace

std::vector<GradCheckCase> primitive_gradcheck_cases(std::uint64_t seed) {
  CaseBuilder b(seed);
  std::vector<GradCheckCase> cases;

  struct ConvShape {
    Shape in, weight;
    std::int64_t stride, pad;
  };
  for (const auto& s : {ConvShape{{1, 2, 5, 5}, {3, 2, 3, 3}, 1, 1}, ConvShape{{2, 3, 6, 7}, {4, 3, 3, 3}, 2, 1},
                        ConvShape{{1, 4, 4, 4}, {2, 4, 1, 1}, 1, 0}}) {
    auto x = b.param(s.in), w = b.param(s.weight), bias = b.param({s.weight[0]});
    b.add(cases, "conv2d " + shape_str(s.in) + " k" + std::to_string(s.weight[2]) + " s" + std::to_string(s.stride),
          {x, w, bias}, [=] { return ops::conv2d(x, w, bias, s.stride, s.pad); });
  }

  struct DeconvShape {
    Shape in, weight;
    std::int64_t stride, pad, out_pad;
  };
  for (const auto& s : {DeconvShape{{1, 2, 4, 4}, {2, 3, 3, 3}, 2, 1, 1},
                        DeconvShape{{2, 3, 3, 5}, {3, 2, 3, 3}, 1, 1, 0},
                        DeconvShape{{1, 1, 3, 3}, {1, 2, 4, 4}, 2, 1, 0}}) {
    auto x = b.param(s.in), w = b.param(s.weight), bias = b.param({s.weight[1]});
    b.add(cases, "conv2d_transpose " + shape_str(s.in) + " k" + std::to_string(s.weight[2]) + " s" +
                     std::to_string(s.stride),
          {x, w, bias}, [=] { return ops::conv2d_transpose(x, w, bias, s.stride, s.pad, s.out_pad); });
  }

  struct ResizeShape {
    Shape in;
    std::int64_t oh, ow;
  };
  for (const auto& s : {ResizeShape{{1, 1, 4, 4}, 8, 8}, ResizeShape{{2, 2, 8, 6}, 3, 4},
                        ResizeShape{{1, 3, 5, 5}, 7, 9}}) {
    auto x = b.param(s.in);
    b.add(cases, "bilinear_resize " + shape_str(s.in) + " -> " + std::to_string(s.oh) + "x" + std::to_string(s.ow),
          {x}, [=] { return ops::bilinear_resize(x, s.oh, s.ow); });
  }

  const std::vector<Shape> shapes{{1, 1, 3, 3}, {2, 3, 4, 5}, {1, 9, 2, 6}};
  for (const auto& shape : shapes) {
    const auto tag = " " + shape_str(shape);
    {
      auto x = b.param(shape, -2.0, 2.0);
      b.add(cases, "softmax_channel" + tag, {x}, [=] { return ops::softmax_channel(x); });
    }
    {
      auto x = b.param(shape, -3.0, 3.0);
      b.add(cases, "sigmoid" + tag, {x}, [=] { return ops::sigmoid(x); });
    }
    {
      auto x = b.param(shape, -2.0, 2.0);
      b.add(cases, "tanh" + tag, {x}, [=] { return ops::tanh(x); });
    }
    {
      auto x = b.param(shape, -2.0, 2.0);
      b.add(cases, "exp" + tag, {x}, [=] { return ops::exp(x); });
    }
    {
      auto x = b.param_away_from_zero(shape);
      b.add(cases, "leaky_relu" + tag, {x}, [=] { return ops::leaky_relu(x, 0.1); });
    }
    {
      auto x = b.param(shape, -4.0, 4.0);
      b.add(cases, "softplus" + tag, {x}, [=] { return ops::softplus(x); });
    }
    {
      auto x = b.param_away_from_zero(shape);
      b.add(cases, "abs" + tag, {x}, [=] { return ops::abs(x); });
    }
    {
      auto x = b.param(shape);
      b.add(cases, "square" + tag, {x}, [=] { return ops::square(x); });
    }
    {
      auto x = b.param(shape), y = b.param(shape);
      b.add(cases, "add" + tag, {x, y}, [=] { return ops::add(x, y); });
      b.add(cases, "sub" + tag, {x, y}, [=] { return ops::sub(x, y); });
      b.add(cases, "mul" + tag, {x, y}, [=] { return ops::mul(x, y); });
    }
    {
      auto x = b.param(shape), y = b.param_away_from_zero(shape, 0.5, 2.0);
      b.add(cases, "div" + tag, {x, y}, [=] { return ops::div(x, y); });
    }
    {
      auto x = b.param(shape);
      b.add(cases, "scale" + tag, {x}, [=] { return ops::scale(x, -1.7); });
      b.add(cases, "add_scalar" + tag, {x}, [=] { return ops::add_scalar(x, 0.3); });
      b.add(cases, "one_minus" + tag, {x}, [=] { return ops::one_minus(x); });
      b.add(cases, "sum" + tag, {x}, [=] { return ops::sum(x); });
      b.add(cases, "sum_channels" + tag, {x}, [=] { return ops::sum_channels(x); });
    }
    {
      Shape single = shape;
      single[1] = 1;
      auto x = b.param(single);
      b.add(cases, "repeat_channels" + tag, {x}, [=] { return ops::repeat_channels(x, 3); });
    }
    {
      Shape other = shape;
      other[1] = 2;
      auto x = b.param(shape), y = b.param(other);
      b.add(cases, "concat_channels" + tag, {x, y}, [=] {
        const Tensor parts[] = {x, y};
        return ops::concat_channels(parts);
      });
    }
    {
      Shape joined = shape;
      joined[1] += 2;
      auto x = b.param(joined);
      const std::int64_t counts[] = {shape[1], 2};
      // Weight the parts differently so each split output is checked.
      b.add(cases, "split_channels" + tag, {x}, [=] {
        const auto parts = ops::split_channels(x, counts);
        return ops::concat_channels(std::vector<Tensor>{ops::square(parts[0]), parts[1]});
      });
    }
  }

  struct SampleShape {
    Shape in;
    std::int64_t ho, wo;
  };
  for (const auto& s : {SampleShape{{1, 1, 4, 4}, 3, 3}, SampleShape{{2, 3, 5, 6}, 4, 2},
                        SampleShape{{1, 2, 6, 3}, 5, 5}}) {
    auto x = b.param(s.in);
    auto coords = sample_coords(b, s.in[0], s.in[2], s.in[3], s.ho, s.wo);
    b.add(cases, "sample_bilinear_at " + shape_str(s.in), {x, coords},
          [=] { return ops::sample_bilinear_at(x, coords); });
  }

  struct PoolShape {
    Shape in;
    std::int64_t k;
  };
  for (const auto& s : {PoolShape{{1, 1, 4, 4}, 2}, PoolShape{{2, 3, 6, 9}, 3}, PoolShape{{1, 2, 8, 8}, 4}}) {
    auto x = b.param(s.in);
    b.add(cases, "sum_pool " + shape_str(s.in) + " k" + std::to_string(s.k), {x},
          [=] { return ops::sum_pool(x, s.k); });
  }
  return cases;
}

GradCheckCase model_gradcheck_case(std::uint64_t seed, std::int64_t checks_per_param) {
  ArchConfig arch;
  arch.base_channels = 4;
  arch.mfp_paths = 1;
  auto model = std::make_shared<LPNetModel>(LPNetModel::create(arch, seed));

  // Check at a generic point. Zero-initialized biases and convs put many
  // pre-activations exactly on the leaky-ReLU kink, and zero offsets put
  // every deformable tap on the integer grid, where one-sided analytic
  // gradients and central differences legitimately disagree.
  auto rng = make_stream(seed, "gradcheck-jitter");
  std::uniform_real_distribution<double> offset_bias(-0.8, 0.8);
  std::normal_distribution<double> jitter(0.0, 0.02);
  model->visit([&](const std::string& name, Tensor& t) {
    const bool offset_bias_param = name.find("offset_conv") != std::string::npos && name.ends_with(".bias");
    for (auto& v : t.mutable_data()) v = offset_bias_param ? offset_bias(rng) : v + jitter(rng);
  });

  const auto scene = std::make_shared<Scene>(generate_scene(random_scene_spec(seed, 32, 32, 60)));
  GradCheckCase c;
  c.name = "lpnet multiscale loss 32x32";
  c.params = model->parameters();
  for (auto& p : c.params) p.set_requires_grad(true);
  c.f = [model, scene] {
    const auto pyramid = progressive_predict(scene->image, scene->sparse, *model);
    return multiscale_loss(pyramid, scene->gt).total;
  };
  c.options.max_checks_per_param = checks_per_param;
  // The loss is O(10); gradients below ~1e-8 are at the round-off level of
  // its central differences and are compared absolutely.
  c.options.denom_floor = 1e-4;
  c.options.seed = seed;
  return c;
}

std::vector<SuiteOutcome> run_gradcheck_suite(std::vector<GradCheckCase> cases) {
  std::vector<SuiteOutcome> out;
  out.reserve(cases.size());
  for (auto& c : cases) out.push_back(SuiteOutcome{c.name, gradcheck(c.f, c.params, c.options)});
  return out;
}

}  // namespace lpnet
