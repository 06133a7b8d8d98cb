#pragma once

#include <cstdint>
#include <string_view>

namespace ptlab {

/// Splittable counter-based generator. Every stream is a pure function of
/// (root seed, split path), so any module can be re-run independently with
/// an identical stream. No libc or libstdc++ distribution machinery is used,
/// keeping byte-identical replay across toolchains.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : key_(mix(seed ^ kRootTag)) {}

  /// Child stream derived from a label; independent of draws made so far.
  SplitRng split(std::string_view label) const;
  SplitRng split(std::uint64_t index) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double next_double();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller.
  double gaussian();
  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n);

 private:
  SplitRng(std::uint64_t key, int) : key_(key) {}
  static std::uint64_t mix(std::uint64_t x);
  static constexpr std::uint64_t kRootTag = 0x9e3779b97f4a7c15ull;

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace ptlab
