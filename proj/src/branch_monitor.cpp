#include "lpnet/branch_monitor.hpp"

namespace lpnet {

namespace {
thread_local BranchMonitor* g_active = nullptr;
}

BranchMonitor::Scope::Scope(BranchMonitor* monitor) : previous_(g_active) { g_active = monitor; }

BranchMonitor::Scope::~Scope() { g_active = previous_; }

BranchMonitor* BranchMonitor::active() { return g_active; }

void BranchMonitor::mix(std::uint64_t value) {
  // splitmix64 finalizer folded into the running hash.
  value += 0x9e3779b97f4a7c15ull;
  value = (value ^ (value >> 30)) * 0xbf58476d1ce4e5b9ull;
  value = (value ^ (value >> 27)) * 0x94d049bb133111ebull;
  value ^= value >> 31;
  hash_ = (hash_ ^ value) * 0x100000001b3ull;
}

}  // namespace lpnet
