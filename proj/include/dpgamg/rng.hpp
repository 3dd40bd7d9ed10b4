#pragma once

// Deterministic random number helpers.  Reports must reproduce bit-for-bit
// for a fixed seed, so distributions are mapped by hand instead of through
// std::uniform_real_distribution, whose output is implementation defined.

#include <cstdint>

namespace dpgamg {

// Counter-style mixer: hash of (seed, index) pairs.  Used for per-element
// coefficient draws so that the draw for element e depends only on (seed, e).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Sequential generator for test vectors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [-1, 1).
  double sym() { return 2.0 * uniform() - 1.0; }

 private:
  std::uint64_t state_;
};

} // namespace dpgamg
