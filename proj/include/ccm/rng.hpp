#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace ccm {

// All randomness in the project flows through this generator rather than
// <random>, whose distributions are not bit-reproducible across standard
// library implementations. xoshiro256++ seeded via splitmix64.

inline std::uint64_t splitmix64_next(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64_next(s);
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  int uniform_int(int n) {  // uniform on {0, ..., n-1}
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

  // Box-Muller; the spare is cached so consecutive draws stay cheap.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  std::vector<double> unit_vector(int dim) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    while (true) {
      double ss = 0.0;
      for (auto& x : v) {
        x = gaussian();
        ss += x * x;
      }
      const double nrm = std::sqrt(ss);
      if (nrm > 1e-12) {
        for (auto& x : v) x /= nrm;
        return v;
      }
    }
  }

  // Independent stream derived from the original seed; used so that e.g.
  // epoch shuffling and data sampling cannot alias each other.
  Rng fork(std::uint64_t stream) const {
    std::uint64_t s = seed_ ^ (0x9e3779b97f4a7c15ull * (stream + 0x632be59bd9b4e019ull));
    return Rng(splitmix64_next(s));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_;
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ccm
