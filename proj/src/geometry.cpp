#include "bls/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>

#include "bls/kernels.hpp"

namespace bls::geom {

namespace {

struct HullPoint {
  double x, y;
  bool operator<(const HullPoint& o) const { return x < o.x || (x == o.x && y < o.y); }
  bool operator==(const HullPoint& o) const { return x == o.x && y == o.y; }
};

double cross(const HullPoint& o, const HullPoint& a, const HullPoint& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Andrew monotone chain, hull returned counterclockwise without repeated endpoint.
std::vector<HullPoint> convex_hull(std::vector<HullPoint> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t n = pts.size();
  if (n <= 2) return pts;
  std::vector<HullPoint> h(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

double dist2(const HullPoint& a, const HullPoint& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

}  // namespace

double diameter_points(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("diameter_points: size mismatch");
  if (xs.empty()) return 0.0;
  std::vector<HullPoint> pts(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) pts[i] = {xs[i], ys[i]};
  auto h = convex_hull(std::move(pts));
  const std::size_t m = h.size();
  if (m == 1) return 0.0;
  if (m == 2) return std::sqrt(dist2(h[0], h[1]));
  // Rotating calipers over antipodal pairs.
  double best = 0.0;
  std::size_t j = 1;
  for (std::size_t i = 0; i < m; ++i) {
    const HullPoint& a = h[i];
    const HullPoint& b = h[(i + 1) % m];
    HullPoint edge{b.x - a.x, b.y - a.y};
    auto advance_gain = [&](std::size_t jj) {
      const HullPoint& p = h[jj % m];
      const HullPoint& q = h[(jj + 1) % m];
      return edge.x * (q.y - p.y) - edge.y * (q.x - p.x);
    };
    while (advance_gain(j) > 0) j = (j + 1) % m;
    best = std::max(best, dist2(a, h[j]));
    best = std::max(best, dist2(b, h[j]));
  }
  return std::sqrt(best);
}

namespace {

constexpr std::uint8_t kUnknown = 0, kWall = 1, kExt = 2;

struct Grid {
  int nx = 0, ny = 0;
  double ox = 0, oy = 0, res = 1;
  std::vector<std::uint8_t> state;

  std::uint8_t& at(int ix, int iy) { return state[static_cast<std::size_t>(iy) * nx + ix]; }
  std::uint8_t get(int ix, int iy) const {
    if (ix < 0 || iy < 0 || ix >= nx || iy >= ny) return kExt;
    return state[static_cast<std::size_t>(iy) * nx + ix];
  }
  bool filled(int ix, int iy) const { return get(ix, iy) != kExt; }
};

void mark_clamped(Grid& g, int ix, int iy) {
  ix = std::clamp(ix, 0, g.nx - 1);
  iy = std::clamp(iy, 0, g.ny - 1);
  g.at(ix, iy) = kWall;
}

// Conservative segment rasterization. At a tie (segment through a lattice
// corner) both axes are stepped one at a time so the marked cells stay
// 4-connected and the corner cannot leak.
void rasterize_segment(Grid& g, double x0, double y0, double x1, double y1) {
  const double gx0 = (x0 - g.ox) / g.res, gy0 = (y0 - g.oy) / g.res;
  const double gx1 = (x1 - g.ox) / g.res, gy1 = (y1 - g.oy) / g.res;
  int ix = static_cast<int>(std::floor(gx0)), iy = static_cast<int>(std::floor(gy0));
  const int jx = static_cast<int>(std::floor(gx1)), jy = static_cast<int>(std::floor(gy1));
  mark_clamped(g, ix, iy);
  const double dx = gx1 - gx0, dy = gy1 - gy0;
  const int sx = dx > 0 ? 1 : -1, sy = dy > 0 ? 1 : -1;
  const double inf = std::numeric_limits<double>::infinity();
  double tmx = inf, tmy = inf, tdx = inf, tdy = inf;
  if (dx != 0) {
    tdx = std::abs(1.0 / dx);
    tmx = ((sx > 0 ? ix + 1 : ix) - gx0) / dx;
  }
  if (dy != 0) {
    tdy = std::abs(1.0 / dy);
    tmy = ((sy > 0 ? iy + 1 : iy) - gy0) / dy;
  }
  long guard = 2L * (std::abs(jx - ix) + std::abs(jy - iy)) + 8;
  while ((ix != jx || iy != jy) && guard-- > 0) {
    if (tmx < tmy) {
      ix += sx;
      tmx += tdx;
    } else if (tmy < tmx) {
      iy += sy;
      tmy += tdy;
    } else {
      ix += sx;
      tmx += tdx;
      mark_clamped(g, ix, iy);
      iy += sy;
      tmy += tdy;
    }
    mark_clamped(g, ix, iy);
  }
  mark_clamped(g, jx, jy);
}

void flood_exterior(Grid& g) {
  std::vector<std::int32_t> stack;
  stack.reserve(1024);
  auto push = [&](int ix, int iy) {
    std::uint8_t& s = g.at(ix, iy);
    if (s == kUnknown) {
      s = kExt;
      stack.push_back(iy * g.nx + ix);
    }
  };
  push(0, 0);
  while (!stack.empty()) {
    const std::int32_t c = stack.back();
    stack.pop_back();
    const int ix = c % g.nx, iy = c / g.nx;
    if (ix > 0) push(ix - 1, iy);
    if (ix + 1 < g.nx) push(ix + 1, iy);
    if (iy > 0) push(ix, iy - 1);
    if (iy + 1 < g.ny) push(ix, iy + 1);
  }
}

// Directions in counterclockwise order: +x, +y, -x, -y.
constexpr int kDx[4] = {1, 0, -1, 0};
constexpr int kDy[4] = {0, 1, 0, -1};

// Boundary edge predicate for the wall follower: walking `dir` from corner
// (i, j) keeps a filled cell on the left and an exterior cell on the right.
bool edge_valid(const Grid& g, int i, int j, int dir) {
  switch (dir) {
    case 0: return g.filled(i, j) && !g.filled(i, j - 1);
    case 1: return g.filled(i - 1, j) && !g.filled(i, j);
    case 2: return g.filled(i - 1, j - 1) && !g.filled(i - 1, j);
    default: return g.filled(i, j - 1) && !g.filled(i - 1, j - 1);
  }
}

// Traces the single closed contour between exterior and non-exterior cells.
// Right turn is tried first: at a saddle (diagonal filled pair) this keeps the
// filled region 8-connected, the complement of the 4-connected flood fill.
std::vector<std::pair<int, int>> trace_contour(const Grid& g) {
  int sx = -1, sy = -1;
  for (int iy = 0; iy < g.ny && sx < 0; ++iy)
    for (int ix = 0; ix < g.nx; ++ix)
      if (g.filled(ix, iy)) {
        sx = ix;
        sy = iy;
        break;
      }
  if (sx < 0) throw DegenerateLoop("outer_boundary: empty rasterization");

  int ci = sx, cj = sy, dir = 0;
  if (!edge_valid(g, ci, cj, dir)) throw std::logic_error("outer_boundary: bad start edge");
  std::vector<std::pair<int, int>> corners;
  const long guard = 8L * g.nx * g.ny + 64;
  long steps = 0;
  do {
    if (++steps > guard) throw std::logic_error("outer_boundary: contour trace did not close");
    corners.emplace_back(ci, cj);
    ci += kDx[dir];
    cj += kDy[dir];
    const int right = (dir + 3) & 3;
    const int left = (dir + 1) & 3;
    if (edge_valid(g, ci, cj, right)) {
      dir = right;
    } else if (edge_valid(g, ci, cj, dir)) {
      // keep direction
    } else if (edge_valid(g, ci, cj, left)) {
      dir = left;
    } else {
      throw std::logic_error("outer_boundary: dead end in contour trace");
    }
  } while (ci != sx || cj != sy || dir != 0);
  return corners;
}

}  // namespace

SimpleLoop outer_boundary(const std::vector<double>& path_xs, const std::vector<double>& path_ys,
                          double resolution, int grid_cap) {
  const std::size_t n = path_xs.size();
  if (n != path_ys.size() || n < 4) throw std::invalid_argument("outer_boundary: need a closed path with >= 4 vertices");
  if (path_xs.front() != path_xs.back() || path_ys.front() != path_ys.back())
    throw std::invalid_argument("outer_boundary: path is not closed");
  if (!(resolution > 0)) throw std::invalid_argument("outer_boundary: resolution must be positive");
  if (grid_cap < 8) throw std::invalid_argument("outer_boundary: grid_cap too small");

  double minx = path_xs[0], maxx = path_xs[0], miny = path_ys[0], maxy = path_ys[0];
  const double* bx = path_xs.data();
  const double* by = path_ys.data();
  double bb[4];
  kern::kernels().bbox(bx, by, n, bb);
  minx = bb[0];
  maxx = bb[1];
  miny = bb[2];
  maxy = bb[3];

  const double w = maxx - minx, h = maxy - miny;
  if (std::hypot(w, h) < 2.0 * resolution)
    throw DegenerateLoop("outer_boundary: path diameter below 2 * resolution");

  Grid g;
  g.res = resolution;
  g.nx = static_cast<int>(std::ceil(w / resolution)) + 4;
  g.ny = static_cast<int>(std::ceil(h / resolution)) + 4;
  if (g.nx > grid_cap || g.ny > grid_cap)
    throw std::runtime_error("outer_boundary: grid side exceeds cap, coarsen the resolution");
  g.ox = minx - 2.0 * resolution;
  g.oy = miny - 2.0 * resolution;
  g.state.assign(static_cast<std::size_t>(g.nx) * g.ny, kUnknown);

  for (std::size_t i = 0; i + 1 < n; ++i)
    rasterize_segment(g, path_xs[i], path_ys[i], path_xs[i + 1], path_ys[i + 1]);

  flood_exterior(g);
  const auto corners = trace_contour(g);

  SimpleLoop loop;
  loop.grid_res = resolution;
  const std::size_t m = corners.size();
  loop.xs.reserve(m / 2 + 2);
  loop.ys.reserve(m / 2 + 2);
  // Keep only corners where the direction changes.
  for (std::size_t i = 0; i < m; ++i) {
    const auto& prev = corners[(i + m - 1) % m];
    const auto& cur = corners[i];
    const auto& next = corners[(i + 1) % m];
    const bool straight = (prev.first == cur.first && cur.first == next.first) ||
                          (prev.second == cur.second && cur.second == next.second);
    if (!straight) {
      loop.xs.push_back(g.ox + cur.first * resolution);
      loop.ys.push_back(g.oy + cur.second * resolution);
    }
  }
  if (loop.xs.size() < 3) throw DegenerateLoop("outer_boundary: contour collapsed");
  loop.xs.push_back(loop.xs.front());
  loop.ys.push_back(loop.ys.front());

  kern::kernels().bbox(loop.xs.data(), loop.ys.data(), loop.xs.size(), loop.bbox);
  loop.diameter = diameter_points(loop.xs, loop.ys);

  // Positive orientation invariant (filled region kept on the left).
  double area2 = 0.0;
  for (std::size_t i = 0; i + 1 < loop.xs.size(); ++i)
    area2 += loop.xs[i] * loop.ys[i + 1] - loop.xs[i + 1] * loop.ys[i];
  if (!(area2 > 0)) throw std::logic_error("outer_boundary: contour not positively oriented");
  return loop;
}

SimpleLoop outer_boundary(const std::vector<cd>& path, double resolution, int grid_cap) {
  std::vector<double> xs(path.size()), ys(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    xs[i] = path[i].real();
    ys[i] = path[i].imag();
  }
  return outer_boundary(xs, ys, resolution, grid_cap);
}

bool hits_disk(const SimpleLoop& loop, cd z, double eps) {
  const double d = boundary_distance(loop, z);
  return d <= eps;
}

bool contains(const SimpleLoop& loop, cd z) {
  const double qx = z.real(), qy = z.imag();
  std::uint64_t crossings = kern::kernels().crossing_number(loop.xs.data(), loop.ys.data(),
                                                            loop.xs.size(), qx, qy);
  return (crossings & 1u) != 0;
}

double boundary_distance(const SimpleLoop& loop, cd z) {
  const double qx = z.real(), qy = z.imag();
  double out = 0.0;
  kern::kernels().min_dist_sq(loop.xs.data(), loop.ys.data(), loop.xs.size(), &qx, &qy, 1, &out);
  return std::sqrt(out);
}

bool separates(const SimpleLoop& loop, cd z1, cd z2) {
  if (boundary_distance(loop, z1) < loop.grid_res || boundary_distance(loop, z2) < loop.grid_res)
    throw BoundaryAmbiguity("separates: query point within one grid cell of the boundary");
  return contains(loop, z1) != contains(loop, z2);
}

bool separates_relaxed(const SimpleLoop& loop, cd z1, cd z2) {
  return contains(loop, z1) != contains(loop, z2);
}

double diameter(const SimpleLoop& loop) { return loop.diameter; }

std::string to_csv(const SimpleLoop& loop) {
  std::string out = "x,y\n";
  char buf[80];
  for (std::size_t i = 0; i < loop.xs.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", loop.xs[i], loop.ys[i]);
    out += buf;
  }
  return out;
}

}  // namespace bls::geom
