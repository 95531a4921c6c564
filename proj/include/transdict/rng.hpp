// Seeded random number generation with explicit float and gaussian mappings.
// std::mt19937_64 output is fully specified by the standard, and the mappings
// here avoid the implementation-defined std distributions, so identical seeds
// produce identical streams on every platform.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace transdict {

// splitmix64 finalizer; used to derive independent sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Modulo bias is negligible for the small n
  // used here.
  std::size_t uniform(std::size_t n) {
    return n == 0 ? 0 : static_cast<std::size_t>(eng_() % n);
  }

  // Standard normal via the Marsaglia polar method.
  double gauss() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * unit() - 1.0;
      v = 2.0 * unit() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double k = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * k;
    has_spare_ = true;
    return u * k;
  }

  // Exponential(1); used for sampling random probability rows.
  double exponential() { return -std::log(1.0 - unit()); }

private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace transdict
