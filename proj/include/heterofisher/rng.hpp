#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace heterofisher {

// SplitMix64 (Steele, Lea & Flood). 64-bit state, full period, passes BigCrush.
// Used everywhere instead of <random> engines so that streams are bit-identical
// across platforms and independent of std library implementations.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in (0, 1].
  double next_unit_pos() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

  /// Uniform double in [0, 1).
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

 private:
  std::uint64_t state_;
};

/// Mixes (seed, stream index) into a decorrelated substream state. Streams with
/// distinct indices are statistically independent regardless of evaluation order.
constexpr std::uint64_t substream_state(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 mix(seed + (stream + 1) * 0x9E3779B97F4A7C15ULL);
  return mix.next();
}

/// Standard-normal draws from the (seed, stream) substream via Box-Muller.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream)
      : gen_(substream_state(seed, stream)) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = gen_.next_unit_pos();
    const double u2 = gen_.next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  SplitMix64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace heterofisher
