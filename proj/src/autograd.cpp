#include "lpnet/autograd.hpp"

#include <algorithm>

#include "lpnet/errors.hpp"

namespace lpnet {

namespace {
thread_local GradTape* g_active = nullptr;
}

GradTape::Recording::Recording(GradTape* tape) : previous_(g_active) { g_active = tape; }
GradTape::Recording::~Recording() { g_active = previous_; }

GradTape* GradTape::active() { return g_active; }

bool needs_grad(std::initializer_list<const Tensor*> inputs) {
  if (g_active == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t != nullptr && t->requires_grad(); });
}

void GradTape::push(std::vector<Tensor> inputs, const Tensor& output, BackwardFn backward) {
  nodes_.push_back(Node{std::move(inputs), output, std::move(backward)});
}

void GradTape::backward(const Tensor& scalar) {
  if (scalar.numel() != 1) throw DimensionError("backward() needs a single-element tensor");
  grads_.clear();
  grads_[scalar.id()] = {1.0};

  std::vector<std::vector<double>*> slots;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    auto found = grads_.find(it->output.id());
    if (found == grads_.end()) continue;
    // unordered_map references survive rehashing, so grad_out stays valid.
    const std::vector<double>& grad_out = found->second;

    slots.assign(it->inputs.size(), nullptr);
    for (std::size_t i = 0; i < it->inputs.size(); ++i) {
      const Tensor& in = it->inputs[i];
      if (!in.defined() || !in.requires_grad()) continue;
      auto& buf = grads_[in.id()];
      if (buf.empty()) buf.assign(static_cast<std::size_t>(in.numel()), 0.0);
      slots[i] = &buf;
    }
    it->backward(grad_out, slots);
  }
}

bool GradTape::has_grad(const Tensor& t) const { return grads_.count(t.id()) != 0; }

Tensor GradTape::grad(const Tensor& t) const {
  auto found = grads_.find(t.id());
  if (found == grads_.end()) return Tensor::zeros(t.shape());
  return Tensor(t.shape(), found->second);
}

void GradTape::clear() {
  nodes_.clear();
  grads_.clear();
}

}  // namespace lpnet
