#pragma once

#include <cmath>
#include <cstdint>

namespace schedsyn::rng {

// Named sub-streams hanging off one master seed. Every draw in the project is
// a pure function of (seed, stream, counters...), so results never depend on
// thread scheduling, batch splitting, or call order.
enum class Stream : uint64_t {
  Init = 1,
  Dropout = 2,
  TeacherForce = 3,
  Latent = 4,
  Oracle = 5,
  Shuffle = 6,
  Split = 7,
  ValLatent = 8,
  Baseline = 9,
};

// splitmix64 finalizer.
constexpr uint64_t mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr uint64_t key(uint64_t seed, Stream s, uint64_t a = 0, uint64_t b = 0,
                       uint64_t c = 0) {
  uint64_t k = mix(seed ^ 0x6a09e667f3bcc908ULL);
  k = mix(k ^ static_cast<uint64_t>(s));
  k = mix(k ^ a);
  k = mix(k ^ b);
  return mix(k ^ c);
}

// Uniform in [0, 1).
inline double uniform(uint64_t k) {
  return static_cast<double>(k >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two decorrelated sub-keys.
inline double normal(uint64_t k) {
  const double u1 = uniform(mix(k ^ 0xd1b54a32d192ed03ULL));
  const double u2 = uniform(mix(k ^ 0x8cb92ba72f3d8dd7ULL));
  const double r = std::sqrt(-2.0 * std::log(u1 + 1e-300));
  return r * std::cos(2.0 * M_PI * u2);
}

// Sequential generator for shuffles and oracle draws; seeded from key().
class Sequence {
 public:
  explicit Sequence(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double normal01() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1 + 1e-300)) * std::cos(2.0 * M_PI * u2);
  }

  uint64_t below(uint64_t n) { return next() % n; }

 private:
  uint64_t state_;
};

// In-place Fisher-Yates; std::shuffle is implementation-defined, this is not.
template <typename Vec>
void shuffle(Vec& v, Sequence& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace schedsyn::rng
