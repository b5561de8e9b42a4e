#pragma once

#include <cmath>
#include <cstdint>

namespace rkbayes {

// splitmix64 finalizer; bijective on uint64, so distinct inputs stay distinct.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Collision-free derivation of per-run / per-stream seeds: each round is a
// bijection, so (run, stream) pairs map to distinct seeds for a fixed master.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run, std::uint64_t stream) {
  return mix64(mix64(mix64(master) ^ run) ^ stream);
}

// Small deterministic generator (splitmix64 stream). Self-contained so chains
// and data generation do not depend on library-specific distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform on [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on (0, 1]; safe to pass through log()
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // standard normal via Box-Muller (cosine branch only)
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace rkbayes
