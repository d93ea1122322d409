#pragma once

#include <cmath>
#include <cstdint>

namespace wd {

// Deterministic 64-bit PRNG (splitmix64). All randomness in the project
// flows through this class so that runs are bitwise reproducible within
// one build, independent of the standard library's distribution
// implementations.
//
// Sub-streams are derived, never shared: derive(tag) mixes the current
// state with a stream tag through the splitmix64 finalizer, producing an
// independent generator. The harness derives one stream per (seed, role).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be >= 1.
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

  // Box-Muller; consumes two uniforms per sample, no caching so the
  // stream position is a simple function of the call count.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586477 * u2);
  }

  // Independent sub-stream tagged by `tag`; does not advance this stream.
  Rng derive(std::uint64_t tag) const {
    std::uint64_t z = state_ ^ (tag * 0x9e3779b97f4a7c15ULL + 0x7f4a7c159e3779b9ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
  }

 private:
  std::uint64_t state_;
};

}  // namespace wd
