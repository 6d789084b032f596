#ifndef VARPG_RNG_HPP
#define VARPG_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace varpg {

// Seeded PRNG wrapper. All distribution transforms are implemented here so
// that a given seed produces the same stream on every platform; nothing in
// the library uses std::*_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log/pow argument.
  double uniform_pos() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller without the cached second deviate: two engine draws per call.
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform integer on [0, n) via rejection; exact for chi-square tests.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t rem = std::numeric_limits<std::uint64_t>::max() % n;
    const std::uint64_t bound = std::numeric_limits<std::uint64_t>::max() - rem;
    std::uint64_t x = engine_();
    while (x > bound) x = engine_();
    return x % n;
  }

  // Derive an independent stream, e.g. one per seed or per worker.
  Rng spawn(std::uint64_t salt) {
    return Rng(engine_() ^ (0x9e3779b97f4a7c15ULL * (salt + 1)));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace varpg

#endif  // VARPG_RNG_HPP
