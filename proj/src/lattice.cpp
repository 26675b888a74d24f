#include "dpa/lattice.hpp"

#include <cassert>

#include "dpa/error.hpp"

namespace dpa {

namespace {

std::vector<std::vector<QQ>> to_q(const std::vector<std::vector<ZZ>>& m) {
  std::vector<std::vector<QQ>> out;
  for (const auto& r : m) {
    std::vector<QQ> q(r.size());
    for (size_t i = 0; i < r.size(); ++i) q[i] = QQ(r[i]);
    out.push_back(std::move(q));
  }
  return out;
}

// solve M c = rhs for square rational M by Gaussian elimination
std::optional<std::vector<QQ>> solve_square(std::vector<std::vector<QQ>> M, std::vector<QQ> rhs) {
  int m = (int)M.size();
  for (int col = 0; col < m; ++col) {
    int p = -1;
    for (int r = col; r < m; ++r)
      if (M[r][col] != 0) {
        p = r;
        break;
      }
    if (p < 0) return std::nullopt;
    std::swap(M[col], M[p]);
    std::swap(rhs[col], rhs[p]);
    QQ inv = M[col][col];
    for (int j = col; j < m; ++j) M[col][j] /= inv;
    rhs[col] /= inv;
    for (int r = 0; r < m; ++r) {
      if (r == col || M[r][col] == 0) continue;
      QQ f = M[r][col];
      for (int j = col; j < m; ++j) M[r][j] -= f * M[col][j];
      rhs[r] -= f * rhs[col];
    }
  }
  return rhs;
}

QQ gram_determinant(const std::vector<std::vector<QQ>>& basis) {
  int d = (int)basis.size();
  std::vector<std::vector<QQ>> G(d, std::vector<QQ>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) {
      QQ s(0);
      for (size_t t = 0; t < basis[i].size(); ++t) s += basis[i][t] * basis[j][t];
      G[i][j] = s;
      G[j][i] = s;
    }
  // fraction-free on rationals is overkill; plain elimination is exact
  QQ det(1);
  for (int col = 0; col < d; ++col) {
    int p = -1;
    for (int r = col; r < d; ++r)
      if (G[r][col] != 0) {
        p = r;
        break;
      }
    if (p < 0) return QQ(0);
    if (p != col) {
      std::swap(G[col], G[p]);
      det = -det;
    }
    det *= G[col][col];
    QQ inv = G[col][col];
    for (int r = col + 1; r < d; ++r) {
      if (G[r][col] == 0) continue;
      QQ f = G[r][col] / inv;
      for (int j = col; j < d; ++j) G[r][j] -= f * G[col][j];
    }
  }
  det.canonicalize();
  return det;
}

void finish_determinant(LatticeBasis& L) {
  L.gram_det = gram_determinant(L.basis);
  if (L.gram_det <= 0) throw DomainError("degenerate lattice basis");
  L.determinant = CReal::rational(L.gram_det).sqrt();
}

ZZ round_nearest(const QQ& q) {
  // ties go to even via floor(q + 1/2) adjustment; any tie rule works here
  QQ t = q + QQ(1, 2);
  ZZ f;
  mpz_fdiv_q(f.get_mpz_t(), t.get_num_mpz_t(), t.get_den_mpz_t());
  return f;
}

// Bezout combination: fills z with sum z_i vals_i = gcd(vals), returns gcd
ZZ bezout_combo(const std::vector<ZZ>& vals, std::vector<ZZ>& z) {
  size_t n = vals.size();
  z.assign(n, ZZ(0));
  ZZ g(0);
  for (size_t i = 0; i < n; ++i) {
    if (vals[i] == 0) continue;
    if (g == 0) {
      g = ::abs(vals[i]);
      z[i] = vals[i] > 0 ? 1 : -1;
      continue;
    }
    ZZ g2, u, v;
    mpz_gcdext(g2.get_mpz_t(), u.get_mpz_t(), v.get_mpz_t(), g.get_mpz_t(),
               vals[i].get_mpz_t());
    for (size_t j = 0; j < i; ++j) z[j] *= u;
    z[i] = v;
    g = g2;
    if (g == 1) break;
  }
  return g;
}

}  // namespace

std::vector<ZZ> LatticeBasis::row_int(int j) const {
  std::vector<ZZ> out(n);
  for (int i = 0; i < n; ++i) {
    if (basis[j][i].get_den() != 1) throw DomainError("row is not integral");
    out[i] = basis[j][i].get_num();
  }
  return out;
}

ZZ det_bareiss(std::vector<std::vector<ZZ>> m) {
  int n = (int)m.size();
  if (n == 0) return ZZ(1);
  ZZ prev(1);
  int sign = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (m[k][k] == 0) {
      int p = -1;
      for (int r = k + 1; r < n; ++r)
        if (m[r][k] != 0) {
          p = r;
          break;
        }
      if (p < 0) return ZZ(0);
      std::swap(m[k], m[p]);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j) {
        ZZ t = m[i][j] * m[k][k] - m[i][k] * m[k][j];
        mpz_divexact(m[i][j].get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
      }
    prev = m[k][k];
  }
  return sign > 0 ? m[n - 1][n - 1] : ZZ(-m[n - 1][n - 1]);
}

std::vector<std::vector<ZZ>> integer_kernel(const std::vector<std::vector<ZZ>>& A, int n) {
  int m = (int)A.size();
  // column echelon with unimodular column operations tracked in U
  std::vector<std::vector<ZZ>> W = A;  // m x n, mutated
  std::vector<std::vector<ZZ>> U(n, std::vector<ZZ>(n, ZZ(0)));  // columns of identity
  for (int i = 0; i < n; ++i) U[i][i] = 1;
  auto col_axpy = [&](int dst, int src, const ZZ& q) {
    if (q == 0) return;
    for (int r = 0; r < m; ++r) W[r][dst] -= q * W[r][src];
    for (int r = 0; r < n; ++r) U[r][dst] -= q * U[r][src];
  };
  auto col_swap = [&](int a, int b) {
    if (a == b) return;
    for (int r = 0; r < m; ++r) std::swap(W[r][a], W[r][b]);
    for (int r = 0; r < n; ++r) std::swap(U[r][a], U[r][b]);
  };
  int rank = 0;
  for (int row = 0; row < m && rank < n; ++row) {
    for (;;) {
      int cmin = -1;
      for (int c = rank; c < n; ++c) {
        if (W[row][c] == 0) continue;
        if (cmin < 0 || ::abs(W[row][c]) < ::abs(W[row][cmin])) cmin = c;
      }
      if (cmin < 0) break;  // row already clear on active columns
      bool others = false;
      for (int c = rank; c < n; ++c) {
        if (c == cmin || W[row][c] == 0) continue;
        others = true;
        ZZ q;
        // round-to-nearest quotient keeps entries small
        QQ ratio(W[row][c], W[row][cmin]);
        ratio.canonicalize();
        q = round_nearest(ratio);
        col_axpy(c, cmin, q);
      }
      if (!others) {
        col_swap(rank, cmin);
        ++rank;
        break;
      }
    }
  }
  std::vector<std::vector<ZZ>> kernel;
  for (int c = rank; c < n; ++c) {
    std::vector<ZZ> v(n);
    for (int r = 0; r < n; ++r) v[r] = U[r][c];
    kernel.push_back(std::move(v));
  }
  return kernel;
}

LatticeBasis full_lattice(int n) {
  LatticeBasis L;
  L.n = n;
  L.d = n;
  L.basis.assign(n, std::vector<QQ>(n, QQ(0)));
  for (int i = 0; i < n; ++i) L.basis[i][i] = 1;
  L.gram_det = 1;
  L.determinant = CReal::integer(1);
  return L;
}

LatticeBasis intersect_lattice(const std::vector<std::vector<ZZ>>& gens) {
  if (gens.empty()) throw DomainError("empty spanning set");
  int n = (int)gens[0].size();
  for (const auto& g : gens)
    if ((int)g.size() != n) throw DomainError("ragged spanning set");
  // orthogonal complement of span(gens), then Z-kernel of the complement:
  // Z^n ∩ span(gens) = {x in Z^n : c.x = 0 for all complement directions c}
  auto comp = integer_kernel(gens, n);
  auto rows = integer_kernel(comp, n);
  if (rows.empty()) throw DomainError("zero-dimensional span");
  LatticeBasis L;
  L.n = n;
  L.d = (int)rows.size();
  L.basis = to_q(rows);
  finish_determinant(L);
  return L;
}

LatticeBasis dual_lattice(const LatticeBasis& L) {
  int d = L.d, n = L.n;
  std::vector<std::vector<QQ>> G(d, std::vector<QQ>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      QQ s(0);
      for (int t = 0; t < n; ++t) s += L.basis[i][t] * L.basis[j][t];
      G[i][j] = s;
    }
  LatticeBasis D;
  D.n = n;
  D.d = d;
  D.dual_flag = !L.dual_flag;
  D.basis.assign(d, std::vector<QQ>(n, QQ(0)));
  for (int i = 0; i < d; ++i) {
    std::vector<QQ> e(d, QQ(0));
    e[i] = 1;
    auto c = solve_square(G, e);
    if (!c) throw DomainError("singular Gram matrix");
    for (int t = 0; t < n; ++t) {
      QQ s(0);
      for (int j = 0; j < d; ++j) s += (*c)[j] * L.basis[j][t];
      s.canonicalize();
      D.basis[i][t] = s;
    }
  }
  finish_determinant(D);
  QQ prod = D.gram_det * L.gram_det;
  prod.canonicalize();
  if (prod != 1) throw Error("dual determinant identity violated");
  return D;
}

std::optional<std::vector<QQ>> span_coords(const LatticeBasis& L, const std::vector<QQ>& x) {
  int d = L.d, n = L.n;
  if ((int)x.size() != n) throw DomainError("dimension mismatch");
  std::vector<std::vector<QQ>> G(d, std::vector<QQ>(d));
  std::vector<QQ> rhs(d, QQ(0));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      QQ s(0);
      for (int t = 0; t < n; ++t) s += L.basis[i][t] * L.basis[j][t];
      G[i][j] = s;
    }
    for (int t = 0; t < n; ++t) rhs[i] += L.basis[i][t] * x[t];
  }
  auto c = solve_square(G, rhs);
  if (!c) return std::nullopt;
  // verify x actually lies in the span (the normal equations alone project)
  for (int t = 0; t < n; ++t) {
    QQ s(0);
    for (int j = 0; j < d; ++j) s += (*c)[j] * L.basis[j][t];
    if (s != x[t]) return std::nullopt;
  }
  for (auto& q : *c) q.canonicalize();
  return c;
}

bool lattice_member(const LatticeBasis& L, const std::vector<QQ>& x) {
  auto c = span_coords(L, x);
  if (!c) return false;
  for (const auto& q : *c)
    if (q.get_den() != 1) return false;
  return true;
}

bool lattice_member(const LatticeBasis& L, const std::vector<ZZ>& x) {
  std::vector<QQ> q(x.size());
  for (size_t i = 0; i < x.size(); ++i) q[i] = QQ(x[i]);
  return lattice_member(L, q);
}

SaturateResult saturate_chain(const std::vector<std::vector<ZZ>>& v, const LatticeBasis& L) {
  int k = (int)v.size(), n = L.n;
  if (k == 0) throw DomainError("empty chain");
  // coordinates of the v_j in the basis of L (must be integral members)
  std::vector<std::vector<ZZ>> vc;
  for (const auto& vj : v) {
    std::vector<QQ> q(n);
    for (int i = 0; i < n; ++i) q[i] = QQ(vj[i]);
    auto c = span_coords(L, q);
    if (!c) throw DomainError("chain vector outside the lattice span");
    std::vector<ZZ> ic(L.d);
    for (int i = 0; i < L.d; ++i) {
      if ((*c)[i].get_den() != 1) throw DomainError("chain vector not in the lattice");
      ic[i] = (*c)[i].get_num();
    }
    vc.push_back(std::move(ic));
  }

  SaturateResult res;
  std::vector<std::vector<ZZ>> bc;          // coords of b_1..b_{j-1} in L-basis
  std::vector<std::vector<QQ>> gammas;      // v-coefficients of each b_i (padded)
  for (int j = 1; j <= k; ++j) {
    // saturated lattice of rank j: Z^d ∩ span(vc_1..vc_j)
    std::vector<std::vector<ZZ>> gens(vc.begin(), vc.begin() + j);
    auto comp = integer_kernel(gens, L.d);
    auto W = integer_kernel(comp, L.d);
    if ((int)W.size() != j) throw DomainError("chain vectors are dependent");

    // coordinates of the previous b's in the W-basis (integral, saturated)
    std::vector<std::vector<ZZ>> M;  // (j-1) x j
    {
      std::vector<std::vector<QQ>> Wq = to_q(W);
      LatticeBasis WL;
      WL.n = L.d;
      WL.d = j;
      WL.basis = Wq;
      for (int i = 0; i < j - 1; ++i) {
        std::vector<QQ> bq(L.d);
        for (int t = 0; t < L.d; ++t) bq[t] = QQ(bc[i][t]);
        auto c = span_coords(WL, bq);
        if (!c) throw Error("saturation invariant broken");
        std::vector<ZZ> ic(j);
        for (int t = 0; t < j; ++t) {
          if ((*c)[t].get_den() != 1) throw Error("saturation invariant broken");
          ic[t] = (*c)[t].get_num();
        }
        M.push_back(std::move(ic));
      }
    }
    // extend M to a unimodular j x j matrix: find z with det[M; z] = 1 via
    // a Bezout combination of the maximal cofactors
    std::vector<ZZ> cof(j);
    for (int c = 0; c < j; ++c) {
      std::vector<std::vector<ZZ>> minor;
      for (int r = 0; r < j - 1; ++r) {
        std::vector<ZZ> row;
        for (int t = 0; t < j; ++t)
          if (t != c) row.push_back(M[r][t]);
        minor.push_back(std::move(row));
      }
      ZZ mdet = det_bareiss(minor);
      cof[c] = ((j - 1 + c) % 2 == 0) ? mdet : ZZ(-mdet);
    }
    std::vector<ZZ> z;
    ZZ g = bezout_combo(cof, z);
    if (g != 1) throw Error("saturation invariant broken: cofactor gcd != 1");
    // w in L-coordinates
    std::vector<ZZ> wc(L.d, ZZ(0));
    for (int t = 0; t < j; ++t)
      for (int s = 0; s < L.d; ++s) wc[s] += z[t] * W[t][s];

    // v_j = sum a_i b_i + m w in the basis (b_1..b_{j-1}, w) of Lambda_j
    std::vector<std::vector<QQ>> Bq;
    for (int i = 0; i < j - 1; ++i) {
      std::vector<QQ> r(L.d);
      for (int t = 0; t < L.d; ++t) r[t] = QQ(bc[i][t]);
      Bq.push_back(std::move(r));
    }
    {
      std::vector<QQ> r(L.d);
      for (int t = 0; t < L.d; ++t) r[t] = QQ(wc[t]);
      Bq.push_back(std::move(r));
    }
    LatticeBasis BL;
    BL.n = L.d;
    BL.d = j;
    BL.basis = Bq;
    std::vector<QQ> vq(L.d);
    for (int t = 0; t < L.d; ++t) vq[t] = QQ(vc[j - 1][t]);
    auto co = span_coords(BL, vq);
    if (!co) throw Error("saturation invariant broken: v_j outside Lambda_j");
    std::vector<ZZ> a(j);
    for (int t = 0; t < j; ++t) {
      if ((*co)[t].get_den() != 1) throw Error("saturation invariant broken: non-integer coords");
      a[t] = (*co)[t].get_num();
    }
    ZZ m = a[j - 1];
    if (m == 0) throw DomainError("chain vectors are dependent");
    if (m < 0) {  // orient so the new basis direction has positive coefficient
      m = -m;
      for (auto& x : wc) x = -x;
    }

    // v-coefficient vector of w: (e_j - sum a_i gamma_i)/m, then center the
    // coefficients below the diagonal with integer multiples of the b_i
    std::vector<QQ> gw(j, QQ(0));
    gw[j - 1] = QQ(1, m);
    for (int i = 0; i < j - 1; ++i)
      for (int t = 0; t <= i; ++t) gw[t] -= QQ(a[i]) * gammas[i][t] / QQ(m);
    std::vector<ZZ> bj = wc;
    for (int i = j - 2; i >= 0; --i) {
      QQ diag = gammas[i][i];  // = 1/m_i > 0
      ZZ t = round_nearest(gw[i] / diag);
      if (t == 0) continue;
      for (int s = 0; s <= i; ++s) gw[s] -= QQ(t) * gammas[i][s];
      for (int s = 0; s < L.d; ++s) bj[s] -= t * bc[i][s];
    }
    for (auto& q : gw) q.canonicalize();
    bc.push_back(bj);
    gammas.push_back(gw);

    // ambient vector
    std::vector<ZZ> amb(n, ZZ(0));
    for (int t = 0; t < L.d; ++t)
      for (int s = 0; s < n; ++s) {
        QQ c = L.basis[t][s] * QQ(bj[t]);
        c.canonicalize();
        if (c.get_den() != 1) throw Error("non-integral primal basis");
        amb[s] += c.get_num();
      }
    res.b.push_back(std::move(amb));
    res.gamma.push_back(gw);
  }
  return res;
}

}  // namespace dpa
