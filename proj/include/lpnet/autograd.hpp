#pragma once

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "lpnet/tensor.hpp"

namespace lpnet {

// Backward closure: receives the gradient of the node output and one
// accumulation buffer per input (nullptr where the input needs no gradient).
using BackwardFn =
    std::function<void(std::span<const double> grad_out, std::span<std::vector<double>*> grad_in)>;

/// Records differentiable operations in execution order and runs reverse-mode
/// accumulation over them.
///
/// A tape is active on the current thread while a Recording guard from
/// record() is alive. Operations whose inputs require gradients append a node
/// to the active tape; with no active tape nothing is recorded. Tapes are
/// single-thread, single-step objects.
class GradTape {
 public:
  class Recording {
   public:
    explicit Recording(GradTape* tape);
    ~Recording();
    Recording(const Recording&) = delete;
    Recording& operator=(const Recording&) = delete;

   private:
    GradTape* previous_;
  };

  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  [[nodiscard]] Recording record() { return Recording(this); }

  static GradTape* active();

  void push(std::vector<Tensor> inputs, const Tensor& output, BackwardFn backward);

  // Seeds d(scalar)/d(scalar) = 1 and propagates to every recorded input.
  void backward(const Tensor& scalar);

  bool has_grad(const Tensor& t) const;
  // Gradient of the last backward() w.r.t. t; zeros if t was not reached.
  Tensor grad(const Tensor& t) const;

  std::size_t node_count() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const void*, std::vector<double>> grads_;
};

// True when an op with these inputs must be recorded on the active tape.
bool needs_grad(std::initializer_list<const Tensor*> inputs);

}  // namespace lpnet
