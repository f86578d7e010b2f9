#pragma once

#include <cstdint>
#include <random>

namespace spinchain {

namespace detail {
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Stream seed for realization `index` of experiment `master`. Stable by
/// construction: seed = splitmix64(splitmix64(master) ^ index), so any
/// single realization is reproducible in isolation.
inline uint64_t stream_seed(uint64_t master, uint64_t index) {
  return detail::splitmix64(detail::splitmix64(master) ^ index);
}

/// mt19937_64 with portable uniform draws (distribution classes are not
/// bit-stable across standard libraries; raw 53-bit mantissas are).
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  double uniform01() { return double(gen_() >> 11) * 0x1p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    // Box-Muller from the portable uniforms
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01(), u2 = uniform01();
    while (u1 <= 0) u1 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(6.283185307179586476925287 * u2);
    have_spare_ = true;
    return r * std::cos(6.283185307179586476925287 * u2);
  }

  uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0;
};

}  // namespace spinchain
