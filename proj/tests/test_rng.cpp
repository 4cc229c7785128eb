#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "bls/rng.hpp"

using bls::Rng;

TEST_CASE("same seed regenerates the identical raw stream") {
  Rng a(12345), b(12345);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("reseed restarts the stream") {
  Rng a(99);
  std::vector<std::uint64_t> first;
  for (int i = 0; i < 16; ++i) first.push_back(a.next_u64());
  a.reseed(99);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == first[std::size_t(i)]);
}

TEST_CASE("distinct seeds and distinct streams differ") {
  Rng a(1), b(2);
  int agree = 0;
  for (int i = 0; i < 64; ++i) agree += a.next_u64() == b.next_u64();
  CHECK(agree == 0);

  Rng s0(7, 0), s1(7, 1);
  agree = 0;
  for (int i = 0; i < 64; ++i) agree += s0.next_u64() == s1.next_u64();
  CHECK(agree == 0);
}

TEST_CASE("stream (seed, k) is deterministic in both arguments") {
  Rng a(42, 17), b(42, 17);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(43, 17), d(42, 18);
  CHECK(Rng(42, 17).next_u64() != c.next_u64());
  CHECK(Rng(42, 17).next_u64() != d.next_u64());
}

TEST_CASE("paired streams are empirically decorrelated") {
  // Correlation of uniforms across streams of one master seed; n = 4096 gives
  // stderr ~ 1/64, gate at 5 sigma.
  const int n = 4096;
  Rng s0(2024, 0), s1(2024, 1);
  double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    double x = s0.uniform(), y = s1.uniform();
    sx += x;
    sy += y;
    sxy += x * y;
    sxx += x * x;
    syy += y * y;
  }
  double cov = sxy / n - (sx / n) * (sy / n);
  double vx = sxx / n - (sx / n) * (sx / n);
  double vy = syy / n - (sy / n) * (sy / n);
  double corr = cov / std::sqrt(vx * vy);
  CHECK(std::fabs(corr) < 5.0 / 64.0);
}

TEST_CASE("uniform stays in [0,1) and uniform_pos never returns zero") {
  Rng r(5);
  for (int i = 0; i < 100000; ++i) {
    double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    double v = r.uniform_pos();
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("uniform interval overload maps to [lo, hi)") {
  Rng r(6);
  for (int i = 0; i < 10000; ++i) {
    double u = r.uniform(-2.5, 4.0);
    CHECK(u >= -2.5);
    CHECK(u < 4.0);
  }
}

TEST_CASE("uniform moments") {
  Rng r(7);
  const int n = 200000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    double u = r.uniform();
    s1 += u;
    s2 += u * u;
  }
  // mean 1/2 with sd 1/sqrt(12 n), second moment 1/3; gate both at 4 sigma.
  CHECK(std::fabs(s1 / n - 0.5) < 4.0 / std::sqrt(12.0 * n));
  CHECK(std::fabs(s2 / n - 1.0 / 3.0) < 4.0 * std::sqrt(4.0 / 45.0 / n));
}

TEST_CASE("normal moments and tail") {
  Rng r(8);
  const int n = 200000;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  int beyond3 = 0;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    s1 += x;
    s2 += x * x;
    s3 += x * x * x;
    s4 += x * x * x * x;
    beyond3 += std::fabs(x) > 3.0;
  }
  CHECK(std::fabs(s1 / n) < 4.0 / std::sqrt(double(n)));
  CHECK(std::fabs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::fabs(s3 / n) < 4.0 * std::sqrt(15.0 / n));
  CHECK(std::fabs(s4 / n - 3.0) < 4.0 * std::sqrt(96.0 / n));
  // P(|X| > 3) = 2(1 - Phi(3)) = 2.6998e-3.
  double p = 2.0 * 0.5 * std::erfc(3.0 / std::sqrt(2.0));
  CHECK(std::fabs(double(beyond3) / n - p) < 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("poisson matches mean and variance across both sampling regimes") {
  Rng r(9);
  for (double mean : {0.3, 4.0, 31.0, 200.0}) {
    const int n = mean > 100 ? 20000 : 100000;
    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      double k = double(r.poisson(mean));
      s1 += k;
      s2 += k * k;
    }
    double m = s1 / n;
    double v = s2 / n - m * m;
    CAPTURE(mean);
    CHECK(std::fabs(m - mean) < 4.0 * std::sqrt(mean / n));
    // Var of the sample variance of Poisson ~ (mean + 2 mean^2) / n.
    CHECK(std::fabs(v - mean) < 4.0 * std::sqrt((mean + 2.0 * mean * mean) / n));
  }
}

TEST_CASE("poisson of nonpositive mean is zero") {
  Rng r(10);
  CHECK(r.poisson(0.0) == 0);
  CHECK(r.poisson(-3.0) == 0);
}

TEST_CASE("below is bounded and roughly uniform") {
  Rng r(11);
  const std::uint64_t n = 7;
  std::vector<int> counts(n, 0);
  const int trials = 70000;
  for (int i = 0; i < trials; ++i) {
    std::uint64_t k = r.below(n);
    REQUIRE(k < n);
    ++counts[std::size_t(k)];
  }
  for (std::uint64_t k = 0; k < n; ++k) {
    double p = 1.0 / double(n);
    CHECK(std::fabs(counts[std::size_t(k)] / double(trials) - p) <
          4.0 * std::sqrt(p * (1 - p) / trials));
  }
  CHECK(r.below(0) == 0);
  for (int i = 0; i < 100; ++i) CHECK(r.below(1) == 0);
}

TEST_CASE("coin is a fair bit") {
  Rng r(12);
  const int n = 100000;
  int heads = 0;
  for (int i = 0; i < n; ++i) heads += r.coin();
  CHECK(std::fabs(heads / double(n) - 0.5) < 4.0 * std::sqrt(0.25 / n));
}

TEST_CASE("splitmix64 reference values") {
  // First three outputs from state 0, from the reference implementation.
  std::uint64_t s = 0;
  CHECK(bls::splitmix64(s) == 0xe220a8397b1dcdafull);
  CHECK(bls::splitmix64(s) == 0x6e789e6aa1b965f4ull);
  CHECK(bls::splitmix64(s) == 0x06c45d188009454full);
}
