// rng.hpp — deterministic random source. std::mt19937_64 has a fixed
// sequence for a fixed seed on every platform; the mappings below avoid
// std::uniform_real_distribution and friends, whose output is
// implementation-defined, so traces and tests reproduce bit-for-bit.

#pragma once

#include <cstdint>
#include <random>

namespace rctl {

class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : rng_(seed) {}

  std::uint64_t next_u64() { return rng_(); }

  // Uniform in [0, 1): 53 top bits scaled by 2^-53.
  double uniform01() { return double(rng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Uniform in {0, ..., n-1} by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = rng_();
    while (v >= limit) v = rng_();
    return v % n;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace rctl
