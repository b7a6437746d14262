#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lpnet {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
};
}  // namespace detail

/// Dense row-major array of doubles. Image-like data uses N x C x H x W.
///
/// Copies share storage; operations never modify their inputs, so a Tensor
/// behaves as an immutable value. Parameters are the exception: the optimizer
/// and the gradient checker write through mutable_data() between steps.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::int64_t rank() const { return static_cast<std::int64_t>(shape().size()); }
  std::int64_t dim(std::int64_t i) const;
  std::int64_t numel() const;

  // NCHW accessors; valid only for rank-4 tensors.
  std::int64_t n() const { return dim(0); }
  std::int64_t c() const { return dim(1); }
  std::int64_t h() const { return dim(2); }
  std::int64_t w() const { return dim(3); }

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;
  double at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool value);

  // Deep copy with fresh identity; drops requires_grad.
  Tensor clone() const;

  // Identity used by the gradient tape.
  const void* id() const { return impl_.get(); }

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

// Throws NumericalError naming `op` if any value is NaN or infinite.
void check_finite(const Tensor& t, const char* op);

}  // namespace lpnet
