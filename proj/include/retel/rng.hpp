#pragma once

#include <cstdint>

namespace retel {

// Counter-based generator: a SplitMix64 sequence whose starting counter is a
// hash of the (seed, stream...) key. Replications keyed by (seed, cell,
// replicate) draw from disjoint streams, so results do not depend on how work
// is scheduled across threads.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : state_(mix(seed)) {}

  CounterRng(std::uint64_t seed, std::uint64_t s1, std::uint64_t s2 = 0,
             std::uint64_t s3 = 0)
      : state_(mix(mix(mix(mix(seed) + s1) + s2) + s3)) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // uniform in [0, 1)
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // uniform in (0, 1)
  double next_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // standard normal via inverse CDF; see stats.cpp for the quantile
  double next_gaussian();

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

 private:
  std::uint64_t state_;
};

}  // namespace retel
