#include "bls/kernels.hpp"

#include <cmath>

// Reference kernels. The AVX2 variants mirror these expression trees exactly;
// any change here must be applied there as well or the bit-exactness tests fail.

namespace bls::kern {
namespace {

void min_dist_sq_scalar(const double* xs, const double* ys, std::size_t n, const double* qx,
                        const double* qy, std::size_t k, double* out) {
  for (std::size_t j = 0; j < k; ++j) out[j] = HUGE_VAL;
  if (n == 0) return;
  if (n == 1) {
    for (std::size_t j = 0; j < k; ++j) {
      const double dx = qx[j] - xs[0], dy = qy[j] - ys[0];
      out[j] = dx * dx + dy * dy;
    }
    return;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double x1 = xs[i], y1 = ys[i];
    const double dx = xs[i + 1] - x1, dy = ys[i + 1] - y1;
    const double len2 = dx * dx + dy * dy;
    for (std::size_t j = 0; j < k; ++j) {
      const double wx = qx[j] - x1, wy = qy[j] - y1;
      double t = (wx * dx + wy * dy) / len2;
      if (!(len2 > 0.0)) t = 0.0;
      if (t < 0.0) t = 0.0;
      if (t > 1.0) t = 1.0;
      const double ex = wx - t * dx, ey = wy - t * dy;
      const double d2 = ex * ex + ey * ey;
      if (d2 < out[j]) out[j] = d2;
    }
  }
}

void bbox_scalar(const double* xs, const double* ys, std::size_t n, double* out) {
  double xmin = xs[0], xmax = xs[0], ymin = ys[0], ymax = ys[0];
  for (std::size_t i = 1; i < n; ++i) {
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

std::uint64_t crossing_number_scalar(const double* xs, const double* ys, std::size_t n, double qx,
                                     double qy) {
  std::uint64_t count = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double y1 = ys[i], y2 = ys[i + 1];
    if ((y1 > qy) == (y2 > qy)) continue;
    const double xc = xs[i] + (qy - y1) * (xs[i + 1] - xs[i]) / (y2 - y1);
    if (qx < xc) ++count;
  }
  return count;
}

std::uint64_t segment_crossings_scalar(const double* xs, const double* ys, std::size_t n,
                                       double ax, double ay, double bx, double by) {
  const double abx = bx - ax, aby = by - ay;
  std::uint64_t count = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
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

const KernelOps scalar_ops = {"scalar", min_dist_sq_scalar, bbox_scalar, crossing_number_scalar,
                              segment_crossings_scalar};

}  // namespace bls::kern
