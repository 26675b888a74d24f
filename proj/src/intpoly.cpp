#include "dpa/intpoly.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

#include "dpa/error.hpp"

namespace dpa {

ZPoly ZPoly::linear_root(const QQ& r) {
  QQ rc = r;
  rc.canonicalize();
  return ZPoly({-rc.get_num(), rc.get_den()});
}

std::string ZPoly::str() const {
  if (is_zero()) return "0";
  std::ostringstream os;
  for (int i = deg(); i >= 0; i--) {
    if (c[i] == 0) continue;
    if (os.tellp() > 0 && c[i] > 0) os << "+";
    if (i == 0)
      os << c[i];
    else if (c[i] == 1)
      os << "x";
    else if (c[i] == -1)
      os << "-x";
    else
      os << c[i] << "*x";
    if (i > 1) os << "^" << i;
  }
  return os.str();
}

ZPoly zp_add(const ZPoly& a, const ZPoly& b) {
  std::vector<ZZ> r(std::max(a.c.size(), b.c.size()), ZZ(0));
  for (size_t i = 0; i < a.c.size(); i++) r[i] += a.c[i];
  for (size_t i = 0; i < b.c.size(); i++) r[i] += b.c[i];
  return ZPoly(std::move(r));
}

ZPoly zp_sub(const ZPoly& a, const ZPoly& b) {
  std::vector<ZZ> r(std::max(a.c.size(), b.c.size()), ZZ(0));
  for (size_t i = 0; i < a.c.size(); i++) r[i] += a.c[i];
  for (size_t i = 0; i < b.c.size(); i++) r[i] -= b.c[i];
  return ZPoly(std::move(r));
}

ZPoly zp_mul(const ZPoly& a, const ZPoly& b) {
  if (a.is_zero() || b.is_zero()) return ZPoly();
  std::vector<ZZ> r(a.c.size() + b.c.size() - 1, ZZ(0));
  for (size_t i = 0; i < a.c.size(); i++)
    for (size_t j = 0; j < b.c.size(); j++) r[i + j] += a.c[i] * b.c[j];
  return ZPoly(std::move(r));
}

ZPoly zp_scale(const ZPoly& a, const ZZ& s) {
  if (s == 0) return ZPoly();
  std::vector<ZZ> r(a.c);
  for (auto& x : r) x *= s;
  return ZPoly(std::move(r));
}

ZPoly zp_neg(const ZPoly& a) { return zp_scale(a, ZZ(-1)); }

ZPoly zp_derivative(const ZPoly& a) {
  if (a.deg() <= 0) return ZPoly();
  std::vector<ZZ> r(a.c.size() - 1);
  for (size_t i = 1; i < a.c.size(); i++) r[i - 1] = a.c[i] * ZZ((unsigned long)i);
  return ZPoly(std::move(r));
}

ZPoly zp_divexact(const ZPoly& a, const ZZ& s) {
  assert(s != 0);
  std::vector<ZZ> r(a.c);
  for (auto& x : r) {
    ZZ q, rem;
    mpz_tdiv_qr(q.get_mpz_t(), rem.get_mpz_t(), x.get_mpz_t(), s.get_mpz_t());
    assert(rem == 0);
    x = q;
  }
  return ZPoly(std::move(r));
}

ZZ zp_content(const ZPoly& a) {
  ZZ g(0);
  for (const auto& x : a.c) {
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_mpz_t());
    if (g == 1) break;
  }
  return g;
}

ZPoly zp_primitive(const ZPoly& a) {
  if (a.is_zero()) return a;
  ZZ g = zp_content(a);
  ZPoly p = zp_divexact(a, g);
  if (p.lc() < 0) p = zp_neg(p);
  return p;
}

ZPoly zp_compose_neg(const ZPoly& f) {
  ZPoly r = f;
  for (int i = 1; i <= r.deg(); i += 2) r.c[i] = -r.c[i];
  r.trim();
  return r;
}

ZPoly zp_reverse(const ZPoly& f) {
  std::vector<ZZ> r(f.c.rbegin(), f.c.rend());
  return ZPoly(std::move(r));
}

ZPoly zp_compose_square(const ZPoly& f) {
  if (f.is_zero()) return f;
  std::vector<ZZ> r(2 * f.deg() + 1, ZZ(0));
  for (int i = 0; i <= f.deg(); i++) r[2 * i] = f.c[i];
  return ZPoly(std::move(r));
}

ZPoly zp_compose_cube(const ZPoly& f) {
  if (f.is_zero()) return f;
  std::vector<ZZ> r(3 * f.deg() + 1, ZZ(0));
  for (int i = 0; i <= f.deg(); i++) r[3 * i] = f.c[i];
  return ZPoly(std::move(r));
}

ZPoly zp_compose_rational_scale(const ZPoly& f, const QQ& r) {
  // roots of output = r * roots of f: out(x) = f(x/r) cleared of denominators
  if (f.is_zero()) return f;
  QQ rc = r;
  rc.canonicalize();
  ZZ p = rc.get_num(), q = rc.get_den();
  if (p == 0) throw DomainError("scaling roots by zero");
  int n = f.deg();
  std::vector<ZZ> out(n + 1);
  // f(x/r) * p^n = sum_i c_i x^i q^i p^(n-i)
  ZZ pq(1);
  for (int i = 0; i <= n; i++) {
    ZZ pw;
    mpz_pow_ui(pw.get_mpz_t(), p.get_mpz_t(), (unsigned long)(n - i));
    out[i] = f.c[i] * pq * pw;
    pq *= q;
  }
  return ZPoly(std::move(out));
}

QQ zp_eval_q(const ZPoly& f, const QQ& x) {
  QQ acc(0);
  for (int i = f.deg(); i >= 0; i--) {
    acc *= x;
    acc += QQ(f.c[i]);
  }
  return acc;
}

int zp_sign_at(const ZPoly& f, const QQ& x) {
  QQ v = zp_eval_q(f, x);
  return sgn(v);
}

// pseudo-remainder with sign-corrected positive multiplier:
// returns R proportional (positive factor) to the remainder of A by B
static ZPoly prem_signfixed(const ZPoly& A, const ZPoly& B) {
  assert(!B.is_zero());
  ZPoly R = A;
  const ZZ& b = B.lc();
  int flips = 0;
  while (!R.is_zero() && R.deg() >= B.deg()) {
    int d = R.deg() - B.deg();
    ZZ rl = R.lc();
    // R <- b*R - rl*x^d*B  (degree strictly drops)
    ZPoly t = zp_scale(R, b);
    ZPoly s = zp_scale(B, rl);
    std::vector<ZZ> shifted(d + s.c.size(), ZZ(0));
    for (size_t i = 0; i < s.c.size(); i++) shifted[i + d] = s.c[i];
    R = zp_sub(t, ZPoly(std::move(shifted)));
    flips++;  // multiplied through by b once
    if ((int)R.c.size() > A.deg()) R.trim();
  }
  // each step multiplied R by b; net sign factor sgn(b)^flips
  if (b < 0 && (flips % 2) == 1) R = zp_neg(R);
  return R;
}

ZPoly zp_gcd(const ZPoly& a0, const ZPoly& b0) {
  ZPoly a = zp_primitive(a0), b = zp_primitive(b0);
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.deg() < b.deg()) std::swap(a, b);
  while (!b.is_zero()) {
    ZPoly r = prem_signfixed(a, b);
    a = b;
    b = zp_primitive(r);
  }
  return zp_primitive(a);
}

ZPoly zp_squarefree(const ZPoly& a) {
  ZPoly p = zp_primitive(a);
  if (p.deg() <= 1) return p;
  ZPoly g = zp_gcd(p, zp_derivative(p));
  if (g.deg() == 0) return p;
  // exact polynomial division p / g over Q, result integer after clearing
  // (g is primitive and divides p): do schoolbook division with rationals
  int nd = p.deg() - g.deg();
  std::vector<QQ> rem(p.c.size()), quo(nd + 1);
  for (size_t i = 0; i < p.c.size(); i++) rem[i] = QQ(p.c[i]);
  for (int k = nd; k >= 0; k--) {
    QQ q = rem[k + g.deg()] / QQ(g.lc());
    quo[k] = q;
    for (int i = 0; i <= g.deg(); i++) rem[k + i] -= q * QQ(g.c[i]);
  }
  // clear denominators
  ZZ den(1);
  for (auto& q : quo) {
    q.canonicalize();
    ZZ d = q.get_den();
    mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), d.get_mpz_t());
  }
  std::vector<ZZ> out(quo.size());
  for (size_t i = 0; i < quo.size(); i++) {
    QQ v = quo[i] * QQ(den);
    v.canonicalize();
    assert(v.get_den() == 1);
    out[i] = v.get_num();
  }
  return zp_primitive(ZPoly(std::move(out)));
}

SturmChain::SturmChain(const ZPoly& f) {
  ZPoly a = zp_primitive(f);
  seq.push_back(a);
  ZPoly b = zp_primitive(zp_derivative(a));
  if (b.is_zero()) return;
  seq.push_back(b);
  ZPoly x = a, y = b;
  while (true) {
    ZPoly r = prem_signfixed(x, y);
    if (r.is_zero()) break;
    r = zp_divexact(r, zp_content(r));  // sign-preserving, unlike zp_primitive
    r = zp_neg(r);                      // Sturm sequence uses negated remainders
    seq.push_back(r);
    x = y;
    y = r;
    if (y.deg() == 0) break;
  }
}

int SturmChain::variations_at(const QQ& x) const {
  int prev = 0, var = 0;
  for (const auto& p : seq) {
    int s = zp_sign_at(p, x);
    if (s == 0) continue;
    if (prev != 0 && s != prev) var++;
    prev = s;
  }
  return var;
}

int SturmChain::count_roots(const QQ& a, const QQ& b) const {
  if (a >= b) return 0;
  return variations_at(a) - variations_at(b);
}

std::vector<RootInterval> zp_isolate_roots(const ZPoly& f0) {
  ZPoly f = zp_squarefree(f0);
  std::vector<RootInterval> out;
  if (f.deg() <= 0) return out;
  if (f.deg() == 1) {
    QQ r(-f.c[0], f.c[1]);
    r.canonicalize();
    out.push_back({r, r, true});
    return out;
  }
  SturmChain st(f);
  // Cauchy bound: all roots inside (-M, M)
  QQ maxc(0);
  for (int i = 0; i < f.deg(); i++) {
    QQ a = QQ(abs(f.c[i]), abs(f.lc()));
    if (a > maxc) maxc = a;
  }
  QQ M = maxc + 1;
  struct Seg {
    QQ a, b;
    int cnt;
  };
  std::vector<Seg> work;
  int total = st.count_roots(-M, M);
  if (total > 0) work.push_back({-M, M, total});
  while (!work.empty()) {
    Seg s = work.back();
    work.pop_back();
    if (s.cnt == 0) continue;
    if (s.cnt == 1) {
      // shrink a little so endpoints are not roots, then emit
      if (zp_sign_at(f, s.b) == 0) {
        out.push_back({s.b, s.b, true});
        continue;
      }
      out.push_back({s.a, s.b, false});
      continue;
    }
    QQ m = (s.a + s.b) / 2;
    if (zp_sign_at(f, m) == 0) {
      out.push_back({m, m, true});
      // perturb the split point so the root at m lands in no half
      QQ eps = (s.b - s.a) / 1024;
      QQ ml = m - eps, mr = m + eps;
      while (zp_sign_at(f, ml) == 0) ml = (s.a + ml) / 2;
      while (zp_sign_at(f, mr) == 0) mr = (mr + s.b) / 2;
      int cl = st.count_roots(s.a, ml);
      int cr = st.count_roots(mr, s.b);
      if (cl > 0) work.push_back({s.a, ml, cl});
      if (cr > 0) work.push_back({mr, s.b, cr});
    } else {
      int cl = st.count_roots(s.a, m);
      int cr = s.cnt - cl;
      if (cl > 0) work.push_back({s.a, m, cl});
      if (cr > 0) work.push_back({m, s.b, cr});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const RootInterval& x, const RootInterval& y) { return x.lo < y.lo; });
  return out;
}

// ---- resultants via Sylvester matrix + fraction-free Bareiss ----

static ZPoly bareiss_det(std::vector<std::vector<ZPoly>>& m) {
  int n = (int)m.size();
  if (n == 0) return ZPoly::constant(ZZ(1));
  ZPoly denom = ZPoly::constant(ZZ(1));
  int sign = 1;
  for (int k = 0; k < n - 1; k++) {
    // pivot
    if (m[k][k].is_zero()) {
      int p = -1;
      for (int i = k + 1; i < n; i++)
        if (!m[i][k].is_zero()) {
          p = i;
          break;
        }
      if (p < 0) return ZPoly();  // singular
      std::swap(m[k], m[p]);
      sign = -sign;
    }
    for (int i = k + 1; i < n; i++) {
      for (int j = k + 1; j < n; j++) {
        ZPoly t = zp_sub(zp_mul(m[i][j], m[k][k]), zp_mul(m[i][k], m[k][j]));
        if (k > 0) {
          // exact division by previous pivot (Bareiss invariant)
          // divide coefficientwise via rational division of polynomials
          // implemented as: t / denom with exact polynomial division
          // denom divides t exactly
          int nd = t.deg() - denom.deg();
          if (t.is_zero()) {
            m[i][j] = t;
            continue;
          }
          std::vector<QQ> rem(t.c.size()), quo(nd + 1);
          for (size_t ii = 0; ii < t.c.size(); ii++) rem[ii] = QQ(t.c[ii]);
          for (int kk = nd; kk >= 0; kk--) {
            QQ q = rem[kk + denom.deg()] / QQ(denom.lc());
            quo[kk] = q;
            for (int ii = 0; ii <= denom.deg(); ii++)
              rem[kk + ii] -= q * QQ(denom.c[ii]);
          }
          std::vector<ZZ> outc(quo.size());
          for (size_t ii = 0; ii < quo.size(); ii++) {
            quo[ii].canonicalize();
            assert(quo[ii].get_den() == 1);
            outc[ii] = quo[ii].get_num();
          }
          m[i][j] = ZPoly(std::move(outc));
        } else {
          m[i][j] = t;
        }
      }
      m[i][k] = ZPoly();
    }
    denom = m[k][k];
  }
  ZPoly det = m[n - 1][n - 1];
  if (sign < 0) det = zp_neg(det);
  return det;
}

ZPoly zp_resultant_y(const ZPolyY& A0, const ZPolyY& B0) {
  ZPolyY A = A0, B = B0;
  A.trim();
  B.trim();
  int m = A.deg(), n = B.deg();
  if (m < 0 || n < 0) return ZPoly();
  if (m == 0 && n == 0) return ZPoly::constant(ZZ(1));
  if (m == 0) {
    // res(const, B) = A0^deg(B)
    ZPoly r = ZPoly::constant(ZZ(1));
    for (int i = 0; i < n; i++) r = zp_mul(r, A.c[0]);
    return r;
  }
  if (n == 0) {
    ZPoly r = ZPoly::constant(ZZ(1));
    for (int i = 0; i < m; i++) r = zp_mul(r, B.c[0]);
    return r;
  }
  int N = m + n;
  std::vector<std::vector<ZPoly>> s(N, std::vector<ZPoly>(N));
  for (int i = 0; i < n; i++)
    for (int j = 0; j <= m; j++) s[i][i + j] = A.c[m - j];
  for (int i = 0; i < m; i++)
    for (int j = 0; j <= n; j++) s[n + i][i + j] = B.c[n - j];
  return bareiss_det(s);
}

}  // namespace dpa
