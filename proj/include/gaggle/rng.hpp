#pragma once

#include <cmath>
#include <cstdint>

namespace gaggle {

// splitmix64: 8 bytes of state, copyable, fast. All randomness in the engine
// flows through this generator so trajectories are pure functions of seeds.
struct SplitMix64 {
  uint64_t state = 0x9e3779b97f4a7c15ULL;

  SplitMix64() = default;
  explicit SplitMix64(uint64_t seed) : state(seed) {}

  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n). Rejection-free multiply-shift; the bias for the tiny
  // ranges used here (< 2^8) is far below 2^-50.
  uint32_t bounded(uint32_t n) {
    return static_cast<uint32_t>((static_cast<__uint128_t>(next()) * n) >> 64);
  }

  // Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  bool coin(double p) { return uniform01() < p; }
};

// Derive an independent stream seed from a master seed. Feeding the mix
// function twice decorrelates consecutive stream ids.
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
  SplitMix64 g(master ^ (0xda3e39cb94b95bdbULL * (stream + 1)));
  g.next();
  return g.next();
}

}  // namespace gaggle
