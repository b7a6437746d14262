#pragma once

#include <cstdint>

namespace lpnet {

/// Fingerprint of the branch decisions taken by piecewise-smooth ops
/// (leaky_relu and abs signs, the exp clamp, bilinear sampling cells and
/// border clamps). Two evaluations with equal fingerprints ran on the same
/// smooth piece of the function.
///
/// Ops report to the monitor active on the current thread; with none active
/// they skip the bookkeeping.
class BranchMonitor {
 public:
  class Scope {
   public:
    explicit Scope(BranchMonitor* monitor);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    BranchMonitor* previous_;
  };

  [[nodiscard]] Scope watch() { return Scope(this); }
  static BranchMonitor* active();

  void mix(std::uint64_t value);
  std::uint64_t fingerprint() const { return hash_; }
  void reset() { hash_ = kSeed; }

 private:
  static constexpr std::uint64_t kSeed = 0xcbf29ce484222325ull;
  std::uint64_t hash_ = kSeed;
};

}  // namespace lpnet
