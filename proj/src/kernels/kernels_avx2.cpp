// AVX2 variants of the kernels. Mirrors kernels_scalar.cpp expression-for-expression;
// this TU is compiled with -mavx2 (and without FMA, so mul+add stay separate IEEE ops
// exactly as in the scalar reference).

#if defined(__AVX2__)

#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "bls/kernels.hpp"

namespace bls::kern {
namespace {

inline double hmin(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_min_pd(lo, hi);
  __m128d sw = _mm_unpackhi_pd(lo, lo);
  lo = _mm_min_sd(lo, sw);
  return _mm_cvtsd_f64(lo);
}

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  __m128d sw = _mm_unpackhi_pd(lo, lo);
  lo = _mm_max_sd(lo, sw);
  return _mm_cvtsd_f64(lo);
}

constexpr std::size_t kQueryBlock = 16;

void min_dist_sq_avx2(const double* xs, const double* ys, std::size_t n, const double* qx,
                      const double* qy, std::size_t k, double* out) {
  for (std::size_t j0 = 0; j0 < k; j0 += kQueryBlock) {
    const std::size_t jn = (k - j0 < kQueryBlock) ? k - j0 : kQueryBlock;
    double acc[kQueryBlock];
    for (std::size_t j = 0; j < jn; ++j) acc[j] = HUGE_VAL;
    if (n == 0) {
      for (std::size_t j = 0; j < jn; ++j) out[j0 + j] = acc[j];
      continue;
    }
    if (n == 1) {
      for (std::size_t j = 0; j < jn; ++j) {
        const double dx = qx[j0 + j] - xs[0], dy = qy[j0 + j] - ys[0];
        out[j0 + j] = dx * dx + dy * dy;
      }
      continue;
    }
    __m256d vacc[kQueryBlock];
    for (std::size_t j = 0; j < jn; ++j) vacc[j] = _mm256_set1_pd(HUGE_VAL);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    const std::size_t nseg = n - 1;
    std::size_t i = 0;
    for (; i + 4 <= nseg; i += 4) {
      const __m256d x1 = _mm256_loadu_pd(xs + i);
      const __m256d y1 = _mm256_loadu_pd(ys + i);
      const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i + 1), x1);
      const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i + 1), y1);
      const __m256d len2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
      const __m256d pos = _mm256_cmp_pd(len2, zero, _CMP_GT_OQ);
      for (std::size_t j = 0; j < jn; ++j) {
        const __m256d wx = _mm256_sub_pd(_mm256_set1_pd(qx[j0 + j]), x1);
        const __m256d wy = _mm256_sub_pd(_mm256_set1_pd(qy[j0 + j]), y1);
        const __m256d dot = _mm256_add_pd(_mm256_mul_pd(wx, dx), _mm256_mul_pd(wy, dy));
        __m256d t = _mm256_div_pd(dot, len2);
        t = _mm256_and_pd(t, pos);  // lanes with len2 == 0 -> t = 0, as in the reference
        t = _mm256_max_pd(t, zero);
        t = _mm256_min_pd(t, one);
        const __m256d ex = _mm256_sub_pd(wx, _mm256_mul_pd(t, dx));
        const __m256d ey = _mm256_sub_pd(wy, _mm256_mul_pd(t, dy));
        const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(ex, ex), _mm256_mul_pd(ey, ey));
        vacc[j] = _mm256_min_pd(vacc[j], d2);
      }
    }
    for (std::size_t j = 0; j < jn; ++j) acc[j] = hmin(vacc[j]);
    for (; i < nseg; ++i) {
      const double x1 = xs[i], y1 = ys[i];
      const double dx = xs[i + 1] - x1, dy = ys[i + 1] - y1;
      const double len2 = dx * dx + dy * dy;
      for (std::size_t j = 0; j < jn; ++j) {
        const double wx = qx[j0 + j] - x1, wy = qy[j0 + j] - y1;
        double t = (wx * dx + wy * dy) / len2;
        if (!(len2 > 0.0)) t = 0.0;
        if (t < 0.0) t = 0.0;
        if (t > 1.0) t = 1.0;
        const double ex = wx - t * dx, ey = wy - t * dy;
        const double d2 = ex * ex + ey * ey;
        if (d2 < acc[j]) acc[j] = d2;
      }
    }
    for (std::size_t j = 0; j < jn; ++j) out[j0 + j] = acc[j];
  }
}

void bbox_avx2(const double* xs, const double* ys, std::size_t n, double* out) {
  double xmin = xs[0], xmax = xs[0], ymin = ys[0], ymax = ys[0];
  std::size_t i = 1;
  if (n >= 5) {
    __m256d vxmin = _mm256_loadu_pd(xs + 1);
    __m256d vxmax = vxmin;
    __m256d vymin = _mm256_loadu_pd(ys + 1);
    __m256d vymax = vymin;
    for (i = 5; i + 4 <= n; i += 4) {
      const __m256d vx = _mm256_loadu_pd(xs + i);
      const __m256d vy = _mm256_loadu_pd(ys + i);
      vxmin = _mm256_min_pd(vxmin, vx);
      vxmax = _mm256_max_pd(vxmax, vx);
      vymin = _mm256_min_pd(vymin, vy);
      vymax = _mm256_max_pd(vymax, vy);
    }
    xmin = std::fmin(xmin, hmin(vxmin));
    xmax = std::fmax(xmax, hmax(vxmax));
    ymin = std::fmin(ymin, hmin(vymin));
    ymax = std::fmax(ymax, hmax(vymax));
  }
  for (; i < n; ++i) {
    if (xs[i] < xmin) xmin = xs[i];
    if (xs[i] > xmax) xmax = xs[i];
    if (ys[i] < ymin) ymin = ys[i];
    if (ys[i] > ymax) ymax = ys[i];
  }
  out[0] = xmin;
  out[1] = xmax;
  out[2] = ymin;
  out[3] = ymax;
}

std::uint64_t crossing_number_avx2(const double* xs, const double* ys, std::size_t n, double qx,
                                   double qy) {
  std::uint64_t count = 0;
  if (n < 2) return 0;
  const std::size_t nseg = n - 1;
  const __m256d vqx = _mm256_set1_pd(qx);
  const __m256d vqy = _mm256_set1_pd(qy);
  std::size_t i = 0;
  for (; i + 4 <= nseg; i += 4) {
    const __m256d y1 = _mm256_loadu_pd(ys + i);
    const __m256d y2 = _mm256_loadu_pd(ys + i + 1);
    const __m256d a1 = _mm256_cmp_pd(y1, vqy, _CMP_GT_OQ);
    const __m256d a2 = _mm256_cmp_pd(y2, vqy, _CMP_GT_OQ);
    const __m256d straddle = _mm256_xor_pd(a1, a2);
    if (_mm256_movemask_pd(straddle) == 0) continue;
    const __m256d x1 = _mm256_loadu_pd(xs + i);
    const __m256d x2 = _mm256_loadu_pd(xs + i + 1);
    const __m256d xc = _mm256_add_pd(
        x1, _mm256_div_pd(_mm256_mul_pd(_mm256_sub_pd(vqy, y1), _mm256_sub_pd(x2, x1)),
                          _mm256_sub_pd(y2, y1)));
    const __m256d lt = _mm256_cmp_pd(vqx, xc, _CMP_LT_OQ);
    count += std::uint64_t(__builtin_popcount(
        unsigned(_mm256_movemask_pd(_mm256_and_pd(straddle, lt)))));
  }
  for (; i < nseg; ++i) {
    const double y1 = ys[i], y2 = ys[i + 1];
    if ((y1 > qy) == (y2 > qy)) continue;
    const double xc = xs[i] + (qy - y1) * (xs[i + 1] - xs[i]) / (y2 - y1);
    if (qx < xc) ++count;
  }
  return count;
}

std::uint64_t segment_crossings_avx2(const double* xs, const double* ys, std::size_t n, double ax,
                                     double ay, double bx, double by) {
  if (n < 2) return 0;
  const std::size_t nseg = n - 1;
  const double abx = bx - ax, aby = by - ay;
  const __m256d vabx = _mm256_set1_pd(abx);
  const __m256d vaby = _mm256_set1_pd(aby);
  const __m256d vax = _mm256_set1_pd(ax);
  const __m256d vay = _mm256_set1_pd(ay);
  const __m256d vbx = _mm256_set1_pd(bx);
  const __m256d vby = _mm256_set1_pd(by);
  const __m256d zero = _mm256_setzero_pd();
  std::uint64_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= nseg; i += 4) {
    const __m256d px = _mm256_loadu_pd(xs + i);
    const __m256d py = _mm256_loadu_pd(ys + i);
    const __m256d sx = _mm256_loadu_pd(xs + i + 1);
    const __m256d sy = _mm256_loadu_pd(ys + i + 1);
    const __m256d o1 = _mm256_sub_pd(_mm256_mul_pd(vabx, _mm256_sub_pd(py, vay)),
                                     _mm256_mul_pd(vaby, _mm256_sub_pd(px, vax)));
    const __m256d o2 = _mm256_sub_pd(_mm256_mul_pd(vabx, _mm256_sub_pd(sy, vay)),
                                     _mm256_mul_pd(vaby, _mm256_sub_pd(sx, vax)));
    const __m256d m12 = _mm256_cmp_pd(_mm256_mul_pd(o1, o2), zero, _CMP_LT_OQ);
    if (_mm256_movemask_pd(m12) == 0) continue;
    const __m256d pqx = _mm256_sub_pd(sx, px);
    const __m256d pqy = _mm256_sub_pd(sy, py);
    const __m256d o3 = _mm256_sub_pd(_mm256_mul_pd(pqx, _mm256_sub_pd(vay, py)),
                                     _mm256_mul_pd(pqy, _mm256_sub_pd(vax, px)));
    const __m256d o4 = _mm256_sub_pd(_mm256_mul_pd(pqx, _mm256_sub_pd(vby, py)),
                                     _mm256_mul_pd(pqy, _mm256_sub_pd(vbx, px)));
    const __m256d m34 = _mm256_cmp_pd(_mm256_mul_pd(o3, o4), zero, _CMP_LT_OQ);
    count += std::uint64_t(
        __builtin_popcount(unsigned(_mm256_movemask_pd(_mm256_and_pd(m12, m34)))));
  }
  for (; i < nseg; ++i) {
    const double px = xs[i], py = ys[i];
    const double sx = xs[i + 1], sy = ys[i + 1];
    const double o1 = abx * (py - ay) - aby * (px - ax);
    const double o2 = abx * (sy - ay) - aby * (sx - ax);
    if (!(o1 * o2 < 0.0)) continue;
    const double pqx = sx - px, pqy = sy - py;
    const double o3 = pqx * (ay - py) - pqy * (ax - px);
    const double o4 = pqx * (by - py) - pqy * (bx - px);
    if (o3 * o4 < 0.0) ++count;
  }
  return count;
}

}  // namespace

// extern: namespace-scope const would otherwise have internal linkage and the
// dispatcher in kernels.cpp could not find it.
extern const KernelOps avx2_ops;
const KernelOps avx2_ops = {"avx2", min_dist_sq_avx2, bbox_avx2, crossing_number_avx2,
                            segment_crossings_avx2};

}  // namespace bls::kern

#endif  // __AVX2__
