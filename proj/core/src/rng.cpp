#include "ptlab/rng.hpp"

#include <cmath>

namespace ptlab {

std::uint64_t SplitRng::mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

SplitRng SplitRng::split(std::string_view label) const {
  // FNV-1a over the label folded into the key.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return SplitRng(mix(key_ ^ h), 0);
}

SplitRng SplitRng::split(std::uint64_t index) const {
  return SplitRng(mix(key_ ^ mix(index + 0x5851f42d4c957f2dull)), 0);
}

std::uint64_t SplitRng::next_u64() { return mix(key_ ^ mix(counter_++)); }

double SplitRng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SplitRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

double SplitRng::gaussian() {
  // Box-Muller, one output per pair of uniforms; u kept away from 0.
  double u = next_double();
  if (u < 0x1.0p-53) u = 0x1.0p-53;
  const double v = next_double();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586477 * v);
}

std::uint64_t SplitRng::next_below(std::uint64_t n) {
  // Rejection-free modulo is fine here; streams are not adversarial.
  return n ? next_u64() % n : 0;
}

}  // namespace ptlab
