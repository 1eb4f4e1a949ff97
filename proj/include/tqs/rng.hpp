#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tqs/common.hpp"

namespace tqs {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seedable, splittable generator. Uniform draws are derived from raw 64-bit
// output directly (no std::uniform_real_distribution) so that streams are
// reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(splitmix64(seed)) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  Real uniform() { return Real(next_u64() >> 11) * Real(1.0 / 9007199254740992.0); }

  Real uniform(Real lo, Real hi) { return lo + (hi - lo) * uniform(); }

  // Uniform index in [0, n).
  size_t index(size_t n) {
    if (n == 0) throw ShapeError("Rng::index: n must be positive");
    // Rejection sampling keeps the draw unbiased.
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return size_t(v % n);
  }

  // Derives an independent child stream; advances this generator.
  Rng split(uint64_t tag) { return Rng(splitmix64(next_u64() ^ splitmix64(tag))); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // mt19937_64 state round-trips exactly through its text representation.
  std::string state() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
  }

  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> gen_;
    if (!is) throw DataError("Rng::set_state: malformed state string");
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace tqs
