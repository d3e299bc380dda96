#pragma once

#include <cmath>
#include <cstdint>

namespace cardio {

/// Deterministic 64-bit generator (splitmix64 finalizer). Sub-streams are
/// derived with derive() so draw counts in one stream never shift another.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Standard normal, Box-Muller; keeps one spare between calls.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Keyed sub-stream seed: stable under reordering of (tag, index) draws.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    SplitMix64 g(seed ^ (0x9e3779b97f4a7c15ull * (tag + 1)));
    SplitMix64 h(g.next_u64() ^ (index * 0xbf58476d1ce4e5b9ull + 1));
    return h.next_u64();
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cardio
