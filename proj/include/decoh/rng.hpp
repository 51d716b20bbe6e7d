#pragma once
// Counter-based random streams. Each (seed, stream) pair yields an
// independent, stateless sequence, so parallel sampling is order-independent
// and runs reproduce bit-identically regardless of thread count.

#include <cstdint>
#include <cmath>
#include <numbers>
#include <utility>

#include "decoh/core.hpp"

namespace decoh {

namespace detail {
// SplitMix64 finalizer; full-avalanche 64-bit mixer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
}  // namespace detail

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(detail::mix64(seed ^ detail::mix64(stream))), counter_(0) {}

  std::uint64_t next_u64() { return detail::mix64(key_ + 0xD1B54A32D192ED03ull * ++counter_); }

  // Uniform in (0, 1]; never returns 0 so log() below is safe.
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double next_uniform(double a, double b) { return a + (b - a) * next_unit(); }

  // Box-Muller pair, standard normal.
  std::pair<double, double> next_gauss_pair() {
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
  }

  double next_gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    auto [a, b] = next_gauss_pair();
    spare_ = b;
    have_spare_ = true;
    return a;
  }

  Vec3 next_gauss3(double sigma) {
    return {sigma * next_gauss(), sigma * next_gauss(), sigma * next_gauss()};
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace decoh
