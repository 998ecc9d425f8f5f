#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "causalaug/error.hpp"

namespace causalaug {

// splitmix64 step (Steele et al.), used to decorrelate seeds and indices.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x9e3779b97f4a7c15ull));
}

// Deterministic random stream. Streams are cheap to construct; every sampled
// instance gets its own substream keyed by (seed, index), so results do not
// depend on evaluation order or parallel scheduling.
class Stream {
 public:
  explicit Stream(std::uint64_t key) : eng_(key) {}

  std::uint64_t bits() { return eng_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    if (n <= 0) throw ValidationError("uniform_int needs n > 0");
    // Rejection to avoid modulo bias; loop terminates almost immediately.
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return static_cast<int>(v % un);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Draw from an unnormalized discrete distribution by CDF walk.
  int discrete(const double* w, int k) {
    double total = 0.0;
    for (int i = 0; i < k; ++i) total += w[i];
    double u = uniform01() * total;
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
      acc += w[i];
      if (u < acc) return i;
    }
    return k - 1;
  }

  // Box-Muller, cosine branch only so each call consumes exactly two uniforms.
  double normal(double mean, double sd) {
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    return mean + sd * z;
  }

  double trunc_normal(double mean, double sd, double lo, double hi) {
    for (;;) {
      double v = normal(mean, sd);
      if (v >= lo && v <= hi) return v;
    }
  }

 private:
  std::mt19937_64 eng_;
};

inline Stream substream(std::uint64_t seed, std::uint64_t index) {
  return Stream(mix64(seed, index));
}

}  // namespace causalaug
