#pragma once
// Accumulators and merge rules shared by the estimators.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace bls::stats {

// Mean/variance accumulator (Welford). Merging follows the parallel-variance update,
// so a fan-out over worker streams merged in a fixed order is deterministic.
struct RunningStat {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / double(n);
    m2 += d * (x - mean);
  }

  void merge(const RunningStat& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double d = o.mean - mean;
    const double nt = double(n) + double(o.n);
    mean += d * double(o.n) / nt;
    m2 += o.m2 + d * d * double(n) * double(o.n) / nt;
    n += o.n;
  }

  double variance() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
  // Standard error of the mean.
  double stderr_mean() const { return n > 1 ? std::sqrt(variance() / double(n)) : 0.0; }
};

// A Monte Carlo estimate with its sampling error and provenance count.
struct Estimate {
  double value = 0.0;
  double stderr_value = 0.0;
  std::uint64_t n = 0;

  static Estimate from_stat(const RunningStat& s, double scale = 1.0) {
    return {s.mean * scale, s.stderr_mean() * std::abs(scale), s.n};
  }

  Estimate scaled(double k) const { return {value * k, stderr_value * std::abs(k), n}; }

  // |a-b| within k combined standard errors.
  static bool consistent(const Estimate& a, const Estimate& b, double k) {
    const double s = std::hypot(a.stderr_value, b.stderr_value);
    return std::abs(a.value - b.value) <= k * s;
  }
};

// Least-squares slope of y against x; returns {slope, stderr(slope)}.
// With per-point sigmas the fit is weighted by 1/sigma^2 and the slope error is the
// propagated (not residual-based) one, which is what the ladder criteria quote.
struct SlopeFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
};

inline SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& sigma = {}) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_slope: need >= 2 points");
  const bool weighted = !sigma.empty();
  if (weighted && sigma.size() != x.size()) throw std::invalid_argument("fit_slope: sigma size");
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = weighted ? 1.0 / (sigma[i] * sigma[i]) : 1.0;
    sw += w;
    sx += w * x[i];
    sy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  if (det <= 0) throw std::runtime_error("fit_slope: degenerate abscissae");
  SlopeFit f;
  f.slope = (sw * sxy - sx * sy) / det;
  f.intercept = (sxx * sy - sx * sxy) / det;
  if (weighted) {
    f.slope_stderr = std::sqrt(sw / det);
  } else {
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.slope * x[i] - f.intercept;
      ss += r * r;
    }
    const std::size_t dof = x.size() > 2 ? x.size() - 2 : 1;
    f.slope_stderr = std::sqrt((ss / double(dof)) * sw / det);
  }
  return f;
}

}  // namespace bls::stats
