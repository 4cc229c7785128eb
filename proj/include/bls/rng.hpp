#pragma once
// Deterministic RNG streams for the Monte Carlo estimators.
//
// All distributions are implemented explicitly (no std::*_distribution) so that a
// (seed, config) pair regenerates byte-identical results on any platform. Worker
// streams are derived from (master seed, stream index) through splitmix64, which is
// also the recommended seeder for xoshiro generators.

#include <cmath>
#include <cstdint>

namespace bls {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// xoshiro256++ (Blackman/Vigna, public domain reference implementation).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { reseed(seed); }

  // Stream `index` of a master seed; distinct indices give decorrelated streams.
  Rng(std::uint64_t master_seed, std::uint64_t stream_index) {
    std::uint64_t mix = master_seed;
    std::uint64_t a = splitmix64(mix);
    mix ^= 0x6a09e667f3bcc909ull + stream_index * 0x9e3779b97f4a7c15ull;
    std::uint64_t b = splitmix64(mix);
    reseed_state(a ^ b, stream_index);
  }

  void reseed(std::uint64_t seed) { reseed_state(seed, 0); }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on [0, 1], never exactly 0 (safe as a log/denominator argument).
  double uniform_pos() { return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Marsaglia polar; the spare is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  // Poisson count. Inversion by sequential search for small mean, otherwise
  // recursive halving (sum of two independent Poisson(mean/2) counts).
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 32.0) {
      const double l = std::exp(-mean);
      std::uint64_t k = 0;
      double p = 1.0;
      do {
        ++k;
        p *= uniform_pos();
      } while (p > l);
      return k - 1;
    }
    // Split recursively: Poisson(m) = Poisson(m/2) + Poisson(m/2) keeps each call in
    // the fast inversion regime while staying exact.
    const double half = 0.5 * mean;
    return poisson(half) + poisson(half);
  }

  // Uniform element of {0, ..., n-1} by rejection (unbiased).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  bool coin() { return (next_u64() >> 63) != 0; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  void reseed_state(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t mix = seed ^ (salt * 0xd2b74407b1ce6e93ull);
    for (auto& s : s_) s = splitmix64(mix);
    have_spare_ = false;
    // xoshiro must not start from the all-zero state.
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[3] = 0x9e3779b97f4a7c15ull;
  }

  std::uint64_t s_[4] = {};
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace bls
