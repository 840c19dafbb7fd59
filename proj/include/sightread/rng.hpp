#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sightread {

// splitmix64 finalizer; used both as a mixer for seed derivation and to
// decorrelate user-supplied seeds before feeding mt19937_64.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic seed derivation for independent sub-streams. Every stream in
// a run is keyed by the master seed plus a stream tag, so results do not
// depend on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
  return mix64(mix64(master) ^ mix64(tag + 0x51ed2701ULL));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b) {
  return derive_seed(derive_seed(master, a), b);
}

// Thin deterministic RNG. The transforms are hand-rolled (instead of
// std::*_distribution) so that identical seeds give identical streams on any
// standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // in [0, 1)
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // in (0, 1]; safe as a log() argument
  double uniform01_open_low() {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // in [0, n)
  int uniform_int(int n) {
    return static_cast<int>(uniform01() * static_cast<double>(n)) % n;
  }

  // standard normal, Box-Muller (no cached spare: two draws per sample keeps
  // the stream layout predictable)
  double gauss() {
    const double u1 = uniform01_open_low();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  // sample an index from a discrete distribution (weights assumed to sum
  // to ~1; the final index absorbs rounding slack)
  template <typename Vec>
  int sample_discrete(const Vec& probs) {
    double u = uniform01();
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      if (u < probs[i]) return static_cast<int>(i);
      u -= probs[i];
    }
    return static_cast<int>(probs.size()) - 1;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sightread
