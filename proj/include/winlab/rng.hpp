#pragma once

#include <cstdint>

#include "winlab/common.hpp"

// Deterministic random streams. Every randomized operation takes an explicit
// seed and derives per-shard/per-draw substreams with splitmix64, so results
// are byte-stable across runs and independent of thread count.

namespace winlab {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent stream seed for (root, index).
inline std::uint64_t derive_stream(std::uint64_t root, std::uint64_t index) {
  std::uint64_t s = root;
  std::uint64_t a = splitmix64(s);
  s = a ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  std::uint64_t b = splitmix64(s);
  return b;
}

// xoshiro256** seeded through splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    for (auto& w : s_) w = splitmix64(seed);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  // Standard normal via Box-Muller (one value per pair of uniforms).
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // Gamma(alpha, 1), Marsaglia-Tsang, with the alpha < 1 boost.
  double gamma(double alpha) {
    if (alpha < 1.0) {
      const double u = uniform_open();
      return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Symmetric Dirichlet(alpha) over n coordinates.
  Vec dirichlet(std::size_t n, double alpha) {
    Vec p(n);
    double sum = 0.0;
    for (auto& x : p) {
      x = gamma(alpha);
      sum += x;
    }
    for (auto& x : p) x /= sum;
    return p;
  }

  // Index sampled from a probability vector (inverse CDF walk).
  std::size_t categorical(const Vec& probs) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.empty() ? 0 : probs.size() - 1;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

}  // namespace winlab
