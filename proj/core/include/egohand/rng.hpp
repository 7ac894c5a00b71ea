#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace egohand {

// Counter-based splittable random generator. Every consumer derives a
// labeled substream so results do not depend on evaluation order.
//
// The core is the splitmix64 finalizer applied to (key, counter). It is not
// cryptographic; it is reproducible across platforms, which is what the
// simulator needs.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : key_(mix(seed ^ kGolden)) {}

  // Derives an independent substream. Same (seed, label) -> same stream.
  SplitRng derive(std::string_view label) const {
    std::uint64_t h = key_;
    for (char c : label) h = mix(h ^ static_cast<std::uint8_t>(c));
    return SplitRng(FromKey{}, mix(h));
  }

  SplitRng derive(std::uint64_t index) const {
    return SplitRng(FromKey{}, mix(key_ ^ mix(index + kGolden)));
  }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  // Standard normal via Box-Muller (deterministic, no cached state).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  struct FromKey {};
  SplitRng(FromKey, std::uint64_t key) : key_(key) {}

  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace egohand
