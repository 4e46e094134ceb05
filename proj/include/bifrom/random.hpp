#pragma once

#include <cstdint>

namespace bifrom {

// SplitMix64 stream. Used instead of <random> distributions, whose output is
// implementation-defined, so seeded results are identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }

 private:
  std::uint64_t state_;
};

// Decorrelated child seed for stream `index` of a parent seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  Rng mix(seed ^ (0xD1B54A32D192ED03ULL * (index + 1)));
  return mix.next();
}

}  // namespace bifrom
