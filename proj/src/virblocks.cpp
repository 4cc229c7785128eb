#include "bls/virblocks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "bls/exactcft.hpp"

namespace bls::vir {

namespace {

// ---------------------------------------------------------------- partitions

void gen_partitions(int n, int max_part, int min_part, Partition& cur,
                    std::vector<Partition>& out) {
  if (n == 0) {
    out.push_back(cur);
    return;
  }
  for (int first = std::min(n, max_part); first >= min_part; --first) {
    cur.push_back(first);
    gen_partitions(n - first, first, min_part, cur, out);
    cur.pop_back();
  }
}

// ------------------------------------------------- commutator word evaluation
//
// A word is a mode list (m_1, ..., m_k) meaning L_{m_1} ... L_{m_k} applied
// between <h| and |h>. Reduction uses [L_a, L_b] = (a-b) L_{a+b} + (c/12) a (a^2-1)
// delta_{a+b,0} on the leftmost adjacent out-of-order pair. In the vacuum module
// L_{-1}|0> = 0 and <0|L_1 = 0, so a trailing -1 or leading +1 kills the word.

class Engine {
 public:
  Engine(double c, double h, bool vacuum) : c_(c), h_(vacuum ? 0.0 : h), vac_(vacuum) {}

  double eval(const std::vector<int>& w) {
    if (w.empty()) return 1.0;
    auto it = memo_eval_.find(w);
    if (it != memo_eval_.end()) return it->second;
    double r = eval_uncached(w);
    memo_eval_.emplace(w, r);
    return r;
  }

  std::map<Partition, double> reduce_ket(const std::vector<int>& w) {
    if (w.empty()) return {{Partition{}, 1.0}};
    auto it = memo_ket_.find(w);
    if (it != memo_ket_.end()) return it->second;
    std::map<Partition, double> r = reduce_ket_uncached(w);
    memo_ket_.emplace(w, r);
    return r;
  }

 private:
  double eval_uncached(const std::vector<int>& w) {
    int f = w.front();
    if (f < 0) return 0.0;
    if (f == 0) return h_ * eval({w.begin() + 1, w.end()});
    if (vac_ && f == 1) return 0.0;
    int b = w.back();
    if (b > 0) return 0.0;
    if (b == 0) return h_ * eval({w.begin(), w.end() - 1});
    if (vac_ && b == -1) return 0.0;
    std::size_t i = disorder(w);
    double r = eval(swapped(w, i)) + double(w[i] - w[i + 1]) * eval(merged(w, i));
    if (w[i] + w[i + 1] == 0) r += central(w[i]) * eval(removed(w, i));
    return r;
  }

  std::map<Partition, double> reduce_ket_uncached(const std::vector<int>& w) {
    int b = w.back();
    if (b > 0) return {};
    if (b == 0) return scaled(reduce_ket({w.begin(), w.end() - 1}), h_);
    if (vac_ && b == -1) return {};
    bool sorted = std::is_sorted(w.begin(), w.end());
    if (sorted && w.back() < 0) {
      Partition p(w.size());
      for (std::size_t k = 0; k < w.size(); ++k) p[k] = -w[k];
      return {{p, 1.0}};
    }
    std::size_t i = disorder(w);
    std::map<Partition, double> r = reduce_ket(swapped(w, i));
    accumulate(r, reduce_ket(merged(w, i)), double(w[i] - w[i + 1]));
    if (w[i] + w[i + 1] == 0) accumulate(r, reduce_ket(removed(w, i)), central(w[i]));
    return r;
  }

  double central(int a) const { return (c_ / 12.0) * double(a) * double(a * a - 1); }

  static std::size_t disorder(const std::vector<int>& w) {
    for (std::size_t i = 0; i + 1 < w.size(); ++i)
      if (w[i] > w[i + 1]) return i;
    throw std::logic_error("word reduction reached a sorted word it cannot close");
  }

  static std::vector<int> swapped(std::vector<int> w, std::size_t i) {
    std::swap(w[i], w[i + 1]);
    return w;
  }
  static std::vector<int> merged(std::vector<int> w, std::size_t i) {
    w[i] += w[i + 1];
    w.erase(w.begin() + i + 1);
    return w;
  }
  static std::vector<int> removed(std::vector<int> w, std::size_t i) {
    w.erase(w.begin() + i, w.begin() + i + 2);
    return w;
  }
  static std::map<Partition, double> scaled(std::map<Partition, double> m, double s) {
    for (auto& kv : m) kv.second *= s;
    return m;
  }
  static void accumulate(std::map<Partition, double>& into, const std::map<Partition, double>& add,
                         double s) {
    for (const auto& kv : add) into[kv.first] += s * kv.second;
  }

  double c_, h_;
  bool vac_;
  std::map<std::vector<int>, double> memo_eval_;
  std::map<std::vector<int>, std::map<Partition, double>> memo_ket_;
};

std::vector<int> bra_word(const Partition& mu) {
  std::vector<int> w(mu.rbegin(), mu.rend());
  return w;  // ascending positive modes
}

std::vector<int> ket_word(const Partition& mu) {
  std::vector<int> w(mu.size());
  for (std::size_t k = 0; k < mu.size(); ++k) w[k] = -mu[k];
  return w;  // ascending negative modes
}

// ------------------------------------------------------------- linear algebra

std::vector<double> lin_solve(std::vector<double> A, std::vector<double> b, const char* what,
                              int level) {
  const std::size_t n = b.size();
  double scale = 0.0;
  for (double v : A) scale = std::max(scale, std::fabs(v));
  if (scale == 0.0) scale = 1.0;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(A[r * n + col]) > std::fabs(A[piv * n + col])) piv = r;
    if (std::fabs(A[piv * n + col]) <= 1e-10 * scale) {
      std::ostringstream os;
      os << what << ": singular matrix at level " << level << " (degenerate module)";
      throw std::runtime_error(os.str());
    }
    if (piv != col) {
      for (std::size_t k = 0; k < n; ++k) std::swap(A[piv * n + k], A[col * n + k]);
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = A[r * n + col] / A[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t k = col; k < n; ++k) A[r * n + k] -= f * A[col * n + k];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t k = ri + 1; k < n; ++k) s -= A[ri * n + k] * x[k];
    x[ri] = s / A[ri * n + ri];
  }
  return x;
}

// Least squares for a consistent overdetermined system, via Householder QR.
// A is row-major nrow x ncol with nrow >= ncol; A and b are consumed.
std::vector<double> lin_lstsq(std::vector<double> A, std::vector<double> b, std::size_t nrow,
                              std::size_t ncol, const char* what, int level) {
  double scale = 0.0;
  for (double v : A) scale = std::max(scale, std::fabs(v));
  if (scale == 0.0) scale = 1.0;
  std::vector<double> v(nrow);
  for (std::size_t k = 0; k < ncol; ++k) {
    double nrm = 0.0;
    for (std::size_t r = k; r < nrow; ++r) nrm = std::hypot(nrm, A[r * ncol + k]);
    if (nrm <= 1e-10 * scale) {
      std::ostringstream os;
      os << what << ": rank-deficient system at level " << level << " (degenerate module)";
      throw std::runtime_error(os.str());
    }
    double alpha = A[k * ncol + k] > 0.0 ? -nrm : nrm;
    v[k] = A[k * ncol + k] - alpha;
    for (std::size_t r = k + 1; r < nrow; ++r) v[r] = A[r * ncol + k];
    double vv = 0.0;
    for (std::size_t r = k; r < nrow; ++r) vv += v[r] * v[r];
    if (vv > 0.0) {
      for (std::size_t j = k; j < ncol; ++j) {
        double s = 0.0;
        for (std::size_t r = k; r < nrow; ++r) s += v[r] * A[r * ncol + j];
        s *= 2.0 / vv;
        for (std::size_t r = k; r < nrow; ++r) A[r * ncol + j] -= s * v[r];
      }
      double s = 0.0;
      for (std::size_t r = k; r < nrow; ++r) s += v[r] * b[r];
      s *= 2.0 / vv;
      for (std::size_t r = k; r < nrow; ++r) b[r] -= s * v[r];
    }
  }
  std::vector<double> x(ncol);
  for (std::size_t ri = ncol; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t k = ri + 1; k < ncol; ++k) s -= A[ri * ncol + k] * x[k];
    x[ri] = s / A[ri * ncol + ri];
  }
  return x;
}

// Bra-side element <h_j| A_i(1) L_{-mu} |h_p>: by adjointness this equals the
// ket-side vertex factor with the same weights.
double gamma_vertex_left(const Partition& mu, double h_p, double h_i, double h_j) {
  return gamma_vertex(mu, h_p, h_i, h_j);
}

bool is_vacuum_weight(double h_p) { return std::fabs(h_p) < 1e-14; }

}  // namespace

std::vector<Partition> partitions_of(int n, int min_part) {
  if (n < 0) return {};
  std::vector<Partition> out;
  Partition cur;
  gen_partitions(n, n, min_part, cur, out);
  if (n == 0) out = {Partition{}};
  return out;
}

double vacuum_expectation(const std::vector<int>& modes, double c, double h, bool vacuum_module) {
  Engine e(c, h, vacuum_module);
  return e.eval(modes);
}

GramMatrix gram_matrix(double c, double h, int level, bool vacuum_module) {
  GramMatrix g;
  g.level = level;
  g.basis = partitions_of(level, vacuum_module ? 2 : 1);
  const std::size_t n = g.basis.size();
  g.a.assign(n * n, 0.0);
  Engine e(c, h, vacuum_module);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      std::vector<int> w = bra_word(g.basis[i]);
      std::vector<int> k = ket_word(g.basis[j]);
      w.insert(w.end(), k.begin(), k.end());
      double v = e.eval(w);
      g.at(i, j) = v;
      g.at(j, i) = v;
    }
  }
  return g;
}

double gamma_vertex(const Partition& mu, double h_p, double h_i, double h_j) {
  // Commuting L_{m} through A_i(z) innermost-first turns each mode into the
  // operator z^{m+1} d/dz + (m+1) h_i z^m acting on z^{h_p - h_i - h_j}; each
  // factor picks up the level already accumulated by the later parts.
  double tail = 0.0;
  for (int m : mu) tail += m;
  double prod = 1.0;
  for (int m : mu) {
    tail -= m;
    prod *= h_p + tail + double(m) * h_i - h_j;
  }
  return prod;
}

std::vector<double> block_coeffs(double c, double h_p, double h1, double h2, double h3, double h4,
                                 int kmax) {
  if (kmax < 0) throw std::invalid_argument("block_coeffs: kmax must be >= 0");
  const bool vac = is_vacuum_weight(h_p);
  std::vector<double> F(kmax + 1, 0.0);
  F[0] = 1.0;
  for (int K = 1; K <= kmax; ++K) {
    GramMatrix g = gram_matrix(c, vac ? 0.0 : h_p, K, vac);
    const std::size_t n = g.basis.size();
    if (n == 0) {
      F[K] = 0.0;
      continue;
    }
    std::vector<double> gr(n), gl(n);
    for (std::size_t i = 0; i < n; ++i) {
      gr[i] = gamma_vertex(g.basis[i], h_p, h3, h4);
      gl[i] = gamma_vertex_left(g.basis[i], h_p, h2, h1);
    }
    std::vector<double> y = lin_solve(g.a, gr, "block_coeffs Gram matrix", K);
    double fk = 0.0;
    for (std::size_t i = 0; i < n; ++i) fk += gl[i] * y[i];
    F[K] = fk;
  }
  return F;
}

std::vector<double> block_coeffs_descent(double c, double h_p, double h1, double h2, double h3,
                                         double h4, int kmax) {
  if (kmax < 0) throw std::invalid_argument("block_coeffs_descent: kmax must be >= 0");
  const bool vac = is_vacuum_weight(h_p);
  const int min_part = vac ? 2 : 1;
  Engine eng(c, vac ? 0.0 : h_p, vac);

  // beta[N] maps level-N basis partitions to the OPE-state coefficients, beta[0] = {(): 1}.
  std::vector<std::map<Partition, double>> beta(kmax + 1);
  beta[0][Partition{}] = 1.0;
  std::vector<double> F(kmax + 1, 0.0);
  F[0] = 1.0;

  std::vector<std::vector<Partition>> bases(kmax + 1);
  for (int N = 0; N <= kmax; ++N) bases[N] = partitions_of(N, min_part);

  for (int N = 1; N <= kmax; ++N) {
    const auto& basis = bases[N];
    const std::size_t ncol = basis.size();

    // Stack the m = 1 and m = 2 descent equations: row blocks indexed by the
    // level N - m basis, unknowns indexed by the level N basis.
    std::vector<double> rows;
    std::vector<double> rhs;
    std::size_t nrow = 0;
    for (int m = 1; m <= 2; ++m) {
      if (N - m < 0) continue;
      const auto& low = bases[N - m];
      if (low.empty() && N - m > 0) continue;
      double r = h_p + double(N - m) + double(m) * h3 - h4;
      std::map<Partition, std::size_t> lowidx;
      for (std::size_t i = 0; i < low.size(); ++i) lowidx[low[i]] = i;
      std::vector<double> blockA(low.size() * ncol, 0.0);
      std::vector<double> blockb(low.size(), 0.0);
      for (std::size_t j = 0; j < ncol; ++j) {
        std::vector<int> w = ket_word(basis[j]);
        w.insert(w.begin(), m);
        for (const auto& kv : eng.reduce_ket(w)) {
          auto it = lowidx.find(kv.first);
          if (it == lowidx.end()) throw std::logic_error("descent image outside module basis");
          blockA[it->second * ncol + j] += kv.second;
        }
      }
      for (std::size_t i = 0; i < low.size(); ++i) {
        auto it = beta[N - m].find(low[i]);
        blockb[i] = r * (it == beta[N - m].end() ? 0.0 : it->second);
      }
      rows.insert(rows.end(), blockA.begin(), blockA.end());
      rhs.insert(rhs.end(), blockb.begin(), blockb.end());
      nrow += low.size();
    }

    if (ncol == 0) {
      // Empty level (vacuum module level 1): the recursion must be consistent.
      for (double v : rhs)
        if (std::fabs(v) > 1e-12)
          throw std::runtime_error("block_coeffs_descent: inconsistent empty level");
      F[N] = 0.0;
      continue;
    }

    std::vector<double> x =
        lin_lstsq(std::move(rows), std::move(rhs), nrow, ncol, "block_coeffs_descent system", N);
    double fk = 0.0;
    for (std::size_t j = 0; j < ncol; ++j) {
      beta[N][basis[j]] = x[j];
      fk += x[j] * gamma_vertex_left(basis[j], h_p, h2, h1);
    }
    F[N] = fk;
  }
  return F;
}

// ------------------------------------------------------------- decomposition

namespace {

std::vector<double> binom_coeffs(double expo, int len) {
  // (1 - x)^{expo} = sum_k b_k x^k with b_0 = 1, b_{k} = b_{k-1} (k - 1 - expo) / k.
  std::vector<double> b(len, 0.0);
  b[0] = 1.0;
  for (int k = 1; k < len; ++k) b[k] = b[k - 1] * (double(k) - 1.0 - expo) / double(k);
  return b;
}

std::vector<double> conv(const std::vector<double>& a, const std::vector<double>& b, int len) {
  std::vector<double> c(len, 0.0);
  for (int i = 0; i < len && i < int(a.size()); ++i)
    for (int j = 0; i + j < len && j < int(b.size()); ++j) c[i + j] += a[i] * b[j];
  return c;
}

struct ChannelSeries {
  std::vector<double> p, q, r;  // integer-power factors of the three channels
};

ChannelSeries channel_series(int len) {
  ChannelSeries s;
  std::vector<double> bin = binom_coeffs(-1.0 / 3.0, len);
  s.p = conv(cft::hyp2f1_series_coeffs(-2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0, len), bin, len);
  s.q = conv(cft::hyp2f1_series_coeffs(-1.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0, len), bin, len);
  s.r = bin;
  return s;
}

}  // namespace

double g_series_coeff(double lambda, double beta, int m, int n) {
  if (m < 0 || n < 0) throw std::invalid_argument("g_series_coeff: negative index");
  if (m % 3 != n % 3) return 0.0;
  const double cb = std::cos(beta);
  const cft::OpeConstants k = cft::ope_constants(lambda, beta);
  const int len = std::max(m, n) / 3 + 1;
  ChannelSeries s = channel_series(len);
  switch (m % 3) {
    case 0: {
      double v = 0.5 * (1.0 - cb) * s.p[m / 3] * s.p[n / 3];
      if (m == 0 && n == 0) v += 0.5 * (1.0 + cb);
      return v;
    }
    case 1:
      return -0.5 * (1.0 - cb) * k.c_t * s.q[(m - 1) / 3] * s.q[(n - 1) / 3];
    default:
      return lambda * k.c_g * (1.0 - cb) * (1.0 - cb) * s.r[(m - 2) / 3] * s.r[(n - 2) / 3];
  }
}

const SpectrumEntry* SpectrumTable::find(int p, int pbar) const {
  for (const auto& e : entries)
    if (e.p == p && e.pbar == pbar) return &e;
  return nullptr;
}

SpectrumTable decompose_fourpoint(double lambda, double beta, int kmax, int max_p) {
  if (max_p < 0) throw std::invalid_argument("decompose_fourpoint: max_p must be >= 0");
  const int kmax_needed = (max_p + 3 + 2) / 3;  // residual depth reaches level (max_p + 3) / 3
  if (kmax < kmax_needed)
    throw std::invalid_argument("decompose_fourpoint: kmax too small for max_p");

  SpectrumTable t;
  t.lambda = lambda;
  t.beta = beta;
  t.kmax = kmax;
  t.max_p = max_p;

  const double c = 2.0 * lambda;
  const double h_ext = cft::delta_layering(lambda, beta);
  const double h_e = cft::delta_edge();

  // Block series per channel column p: F^{(p)}_J, J = 0..kmax.
  std::vector<std::vector<double>> blocks(max_p + 1);
  for (int p = 0; p <= max_p; ++p)
    blocks[p] = block_coeffs(c, double(p) / 3.0, h_ext, h_ext, h_e, h_e, kmax);

  // Sites ordered by total level so every subtraction only uses extracted values.
  std::vector<std::pair<int, int>> sites;
  for (int p = 0; p <= max_p; ++p)
    for (int pb = 0; pb <= max_p; ++pb) sites.emplace_back(p, pb);
  std::sort(sites.begin(), sites.end(), [](auto a, auto b) {
    if (a.first + a.second != b.first + b.second) return a.first + a.second < b.first + b.second;
    return a < b;
  });

  for (auto [p, pb] : sites) {
    double a = g_series_coeff(lambda, beta, p, pb);
    double sub = 0.0, abssum = std::fabs(a);
    for (const auto& e : t.entries) {
      if (e.p > p || e.pbar > pb || (e.p == p && e.pbar == pb)) continue;
      if ((p - e.p) % 3 != 0 || (pb - e.pbar) % 3 != 0) continue;
      double term = e.product * blocks[e.p][(p - e.p) / 3] * blocks[e.pbar][(pb - e.pbar) / 3];
      sub += term;
      abssum += std::fabs(term);
    }
    double rho = a - sub;
    if (abssum > 1e10 * std::max(1.0, std::fabs(a))) {
      std::ostringstream os;
      os << "decompose_fourpoint: ill-conditioned extraction at site (" << p << "," << pb << ")";
      throw std::runtime_error(os.str());
    }
    SpectrumEntry e;
    e.p = p;
    e.pbar = pb;
    e.dim = double(p + pb) / 3.0;
    e.product = rho;
    t.entries.push_back(e);
  }

  // Residual: reconstruction error at the site's next descendant depth (p+3, p'+3),
  // measuring what the extracted channels up to max_p leave unexplained there.
  for (auto& e : t.entries) {
    int m = e.p + 3, n = e.pbar + 3;
    double recon = 0.0;
    for (const auto& q : t.entries) {
      if (q.p > m || q.pbar > n) continue;
      if ((m - q.p) % 3 != 0 || (n - q.pbar) % 3 != 0) continue;
      recon += q.product * blocks[q.p][(m - q.p) / 3] * blocks[q.pbar][(n - q.pbar) / 3];
    }
    e.residual = std::fabs(g_series_coeff(lambda, beta, m, n) - recon);
  }
  return t;
}

CentralChargeCheck central_charge_check(double lambda, double beta) {
  CentralChargeCheck r;
  r.raw_coeff = g_series_coeff(lambda, beta, 6, 0);
  if (std::fabs(r.raw_coeff) < 1e-300)
    throw std::invalid_argument("central_charge_check: coefficient vanishes (beta = 0?)");
  const double h_ext = cft::delta_layering(lambda, beta);
  const double h_e = cft::delta_edge();
  // a_{6,0} must equal the vacuum-channel level-2 block coefficient F_2(c); solve for c
  // using the closed form F_2 = 2 h_ext h_e / c, then confirm against the Gram route.
  r.c_recovered = 2.0 * h_ext * h_e / r.raw_coeff;
  std::vector<double> F = block_coeffs(r.c_recovered, 0.0, h_ext, h_ext, h_e, h_e, 2);
  if (std::fabs(F[2] - r.raw_coeff) > 1e-12 * (1.0 + std::fabs(r.raw_coeff)))
    throw std::runtime_error("central_charge_check: vacuum block inversion check failed");
  return r;
}

}  // namespace bls::vir
