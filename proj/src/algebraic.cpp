#include "dpa/algebraic.hpp"

#include <mpfr.h>

#include <cassert>

#include "dpa/error.hpp"
#include "dpa/interval.hpp"

namespace dpa {

AlgebraicReal::AlgebraicReal(const QQ& r) {
  QQ rc = r;
  rc.canonicalize();
  f_ = ZPoly::linear_root(rc);
  lo_ = hi_ = rc;
  exact_ = true;
}

AlgebraicReal::AlgebraicReal(const ZPoly& f, const RootInterval& ri) {
  if (ri.exact) {
    *this = AlgebraicReal(ri.lo);
    return;
  }
  f_ = zp_squarefree(f);
  lo_ = ri.lo;
  hi_ = ri.hi;
  exact_ = false;
  // normalize to a sign-change bracket so later refinement is plain bisection
  if (zp_sign_at(f_, lo_) == 0 || zp_sign_at(f_, hi_) == 0)
    throw DomainError("isolating interval endpoint is a root");
  if (zp_sign_at(f_, lo_) == zp_sign_at(f_, hi_))
    throw DomainError("interval does not bracket a sign change of squarefree poly");
}

void AlgebraicReal::bisect_once() const {
  QQ m = (lo_ + hi_) / 2;
  int sm = zp_sign_at(f_, m);
  if (sm == 0) {
    // landed exactly on the root: collapse
    lo_ = hi_ = m;
    const_cast<AlgebraicReal*>(this)->exact_ = true;
    const_cast<AlgebraicReal*>(this)->f_ = ZPoly::linear_root(m);
    return;
  }
  if (sm == zp_sign_at(f_, lo_))
    lo_ = m;
  else
    hi_ = m;
}

void AlgebraicReal::refine_to(const QQ& width) const {
  while (!exact_ && hi_ - lo_ > width) bisect_once();
}

int AlgebraicReal::sign() const {
  if (exact_) return sgn(lo_);
  if (lo_ > 0) return 1;
  if (hi_ < 0) return -1;
  // zero is inside [lo,hi]; it is the root itself iff f(0) == 0
  if (f_.c.empty() || f_.c[0] == 0) {
    // unique root in the interval and 0 is a root lying inside => value 0
    if (lo_ < 0 && hi_ > 0) return 0;
  }
  while (!exact_ && lo_ <= 0 && hi_ >= 0) bisect_once();
  if (exact_) return sgn(lo_);
  return lo_ > 0 ? 1 : -1;
}

// rational interval arithmetic helpers
namespace {
struct QIv {
  QQ lo, hi;
};
QIv qiv_add(const QIv& a, const QIv& b) { return {a.lo + b.lo, a.hi + b.hi}; }
QIv qiv_mul(const QIv& a, const QIv& b) {
  QQ c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  QQ lo = c[0], hi = c[0];
  for (int i = 1; i < 4; i++) {
    if (c[i] < lo) lo = c[i];
    if (c[i] > hi) hi = c[i];
  }
  return {lo, hi};
}
}  // namespace

// isolate which root of h equals (a op b); op: 0 add, 1 mul
AlgebraicReal alg_from_resultant(const ZPoly& h0, const AlgebraicReal& a,
                                 const AlgebraicReal& b, int op) {
  ZPoly h = zp_squarefree(h0);
  if (h.deg() < 1) throw DomainError("degenerate resultant");
  SturmChain st(h);
  while (true) {
    QIv ia{a.lo(), a.hi()}, ib{b.lo(), b.hi()};
    QIv j = (op == 0) ? qiv_add(ia, ib) : qiv_mul(ia, ib);
    bool lo_root = zp_sign_at(h, j.lo) == 0;
    bool hi_root = zp_sign_at(h, j.hi) == 0;
    if (!lo_root && !hi_root) {
      int cnt = st.count_roots(j.lo, j.hi);
      assert(cnt >= 1);
      if (cnt == 1) {
        if (zp_sign_at(h, j.lo) != zp_sign_at(h, j.hi))
          return AlgebraicReal(h, {j.lo, j.hi, false});
        // single root without sign change cannot happen for squarefree h
      }
    } else if (lo_root && j.lo == j.hi) {
      return AlgebraicReal(j.lo);
    }
    if (a.is_exact() && b.is_exact()) {
      // both exact: the value is rational, compute it directly
      QQ v = (op == 0) ? QQ(a.rational() + b.rational()) : QQ(a.rational() * b.rational());
      return AlgebraicReal(v);
    }
    a.refine_to((a.hi() - a.lo()) / 16);
    b.refine_to((b.hi() - b.lo()) / 16);
  }
}

AlgebraicReal AlgebraicReal::add(const AlgebraicReal& a, const AlgebraicReal& b) {
  if (a.exact_ && b.exact_) return AlgebraicReal(a.lo_ + b.lo_);
  if (a.exact_) return add_rational(b, a.lo_);
  if (b.exact_) return add_rational(a, b.lo_);
  // h(x) = res_y(f(y), g(x - y))
  const ZPoly& g = b.f_;
  int m = g.deg();
  // g(x - y) as polynomial in y with Z[x] coefficients
  ZPolyY G;
  G.c.assign(m + 1, ZPoly());
  // (x - y)^j expanded: coefficient of y^i is C(j,i) (-1)^i x^(j-i)
  std::vector<std::vector<ZZ>> binom(m + 1, std::vector<ZZ>(m + 1, ZZ(0)));
  for (int j = 0; j <= m; j++) {
    binom[j][0] = 1;
    for (int i = 1; i <= j; i++)
      binom[j][i] = binom[j - 1][i - 1] + ((i <= j - 1) ? binom[j - 1][i] : ZZ(0));
  }
  for (int i = 0; i <= m; i++) {
    std::vector<ZZ> coef;  // polynomial in x
    for (int j = i; j <= m; j++) {
      ZZ t = g.c[j] * binom[j][i];
      if ((i % 2) == 1) t = -t;
      size_t pos = (size_t)(j - i);
      if (coef.size() <= pos) coef.resize(pos + 1, ZZ(0));
      coef[pos] += t;
    }
    G.c[i] = ZPoly(std::move(coef));
  }
  ZPolyY F;
  F.c.assign(a.f_.c.size(), ZPoly());
  for (size_t i = 0; i < a.f_.c.size(); i++) F.c[i] = ZPoly::constant(a.f_.c[i]);
  ZPoly h = zp_resultant_y(F, G);
  return alg_from_resultant(h, a, b, 0);
}

AlgebraicReal AlgebraicReal::mul(const AlgebraicReal& a, const AlgebraicReal& b) {
  if (a.exact_ && b.exact_) return AlgebraicReal(a.lo_ * b.lo_);
  if (a.exact_) return mul_rational(b, a.lo_);
  if (b.exact_) return mul_rational(a, b.lo_);
  // h(x) = res_y(f(y), y^m g(x/y)); coefficient of y^i is g_{m-i} x^{m-i}
  const ZPoly& g = b.f_;
  int m = g.deg();
  if (g.c[0] == 0) {
    // 0 is a root of g but b is isolated away from 0 unless b == 0
    if (b.sign() == 0) return AlgebraicReal(QQ(0));
  }
  ZPolyY G;
  G.c.assign(m + 1, ZPoly());
  for (int i = 0; i <= m; i++) {
    std::vector<ZZ> coef((size_t)(m - i) + 1, ZZ(0));
    coef[m - i] = g.c[m - i];
    G.c[i] = ZPoly(std::move(coef));
  }
  ZPolyY F;
  F.c.assign(a.f_.c.size(), ZPoly());
  for (size_t i = 0; i < a.f_.c.size(); i++) F.c[i] = ZPoly::constant(a.f_.c[i]);
  ZPoly h = zp_resultant_y(F, G);
  return alg_from_resultant(h, a, b, 1);
}

AlgebraicReal AlgebraicReal::neg(const AlgebraicReal& a) {
  if (a.exact_) return AlgebraicReal(-a.lo_);
  ZPoly h = zp_primitive(zp_compose_neg(a.f_));
  AlgebraicReal r;
  r.f_ = h;
  r.lo_ = -a.hi_;
  r.hi_ = -a.lo_;
  r.exact_ = false;
  return r;
}

AlgebraicReal AlgebraicReal::sub(const AlgebraicReal& a, const AlgebraicReal& b) {
  return add(a, neg(b));
}

AlgebraicReal AlgebraicReal::add_rational(const AlgebraicReal& a, const QQ& r0) {
  QQ r = r0;
  r.canonicalize();
  if (a.exact_) return AlgebraicReal(a.lo_ + r);
  if (r == 0) return a;
  // roots shifted by +r: h(x) = f(x - r) cleared of denominators
  const ZZ p = r.get_num(), q = r.get_den();
  int n = a.f_.deg();
  // sum_i c_i q^(n-i) (q x - p)^i
  ZPoly acc;
  ZPoly base({-p, q});
  ZPoly pw = ZPoly::constant(ZZ(1));
  for (int i = 0; i <= n; i++) {
    ZZ qp;
    mpz_pow_ui(qp.get_mpz_t(), q.get_mpz_t(), (unsigned long)(n - i));
    acc = zp_add(acc, zp_scale(pw, a.f_.c[i] * qp));
    if (i < n) pw = zp_mul(pw, base);
  }
  AlgebraicReal out;
  out.f_ = zp_primitive(acc);
  out.lo_ = a.lo_ + r;
  out.hi_ = a.hi_ + r;
  out.exact_ = false;
  return out;
}

AlgebraicReal AlgebraicReal::mul_rational(const AlgebraicReal& a, const QQ& r0) {
  QQ r = r0;
  r.canonicalize();
  if (r == 0) return AlgebraicReal(QQ(0));
  if (a.exact_) return AlgebraicReal(a.lo_ * r);
  AlgebraicReal out;
  out.f_ = zp_primitive(zp_compose_rational_scale(a.f_, r));
  if (r > 0) {
    out.lo_ = a.lo_ * r;
    out.hi_ = a.hi_ * r;
  } else {
    out.lo_ = a.hi_ * r;
    out.hi_ = a.lo_ * r;
  }
  out.exact_ = false;
  return out;
}

AlgebraicReal AlgebraicReal::inverse(const AlgebraicReal& a) {
  int s = a.sign();
  if (s == 0) throw DomainError("inverse of zero");
  if (a.exact_) return AlgebraicReal(QQ(1) / a.lo_);
  // keep zero outside the isolating interval
  while (a.lo_ <= 0 && a.hi_ >= 0) a.bisect_once();
  if (a.exact_) return AlgebraicReal(QQ(1) / a.lo_);
  AlgebraicReal out;
  out.f_ = zp_primitive(zp_reverse(a.f_));
  out.lo_ = QQ(1) / a.hi_;
  out.hi_ = QQ(1) / a.lo_;
  out.exact_ = false;
  if (zp_sign_at(out.f_, out.lo_) == 0 || zp_sign_at(out.f_, out.hi_) == 0)
    throw DomainError("inverse endpoint degenerate");
  return out;
}

AlgebraicReal AlgebraicReal::div(const AlgebraicReal& a, const AlgebraicReal& b) {
  if (b.exact_) {
    if (b.lo_ == 0) throw DomainError("division by zero");
    return mul_rational(a, QQ(1) / b.lo_);
  }
  return mul(a, inverse(b));
}

AlgebraicReal AlgebraicReal::abs(const AlgebraicReal& a) {
  int s = a.sign();
  if (s >= 0) return a;
  return neg(a);
}

namespace {
// rational outward bounds for sqrt/cbrt of rationals via mpfr
QQ root_bound(const QQ& v, int k, bool upper) {
  mpfr_t x;
  mpfr_init2(x, 192);
  mpfr_set_q(x, v.get_mpq_t(), upper ? MPFR_RNDU : MPFR_RNDD);
  if (k == 2)
    mpfr_sqrt(x, x, upper ? MPFR_RNDU : MPFR_RNDD);
  else
    mpfr_cbrt(x, x, upper ? MPFR_RNDU : MPFR_RNDD);
  QQ out = mpfr_to_rational(x);
  mpfr_clear(x);
  return out;
}
}  // namespace

AlgebraicReal AlgebraicReal::sqrt(const AlgebraicReal& a) {
  int s = a.sign();
  if (s < 0) throw DomainError("sqrt of negative value");
  if (s == 0) return AlgebraicReal(QQ(0));
  if (a.exact_) {
    // exact rational square?
    QQ v = a.lo_;
    ZZ n = v.get_num(), d = v.get_den();
    ZZ rn, rd;
    if (mpz_perfect_square_p(n.get_mpz_t()) && mpz_perfect_square_p(d.get_mpz_t())) {
      mpz_sqrt(rn.get_mpz_t(), n.get_mpz_t());
      mpz_sqrt(rd.get_mpz_t(), d.get_mpz_t());
      return AlgebraicReal(QQ(rn, rd));
    }
  }
  while (!a.exact_ && a.lo_ <= 0) a.bisect_once();
  ZPoly h = zp_squarefree(zp_compose_square(a.f_));
  SturmChain st(h);
  while (true) {
    QQ jlo = root_bound(a.lo_, 2, false);
    QQ jhi = root_bound(a.hi_, 2, true);
    if (jlo > 0 && zp_sign_at(h, jlo) != 0 && zp_sign_at(h, jhi) != 0 &&
        st.count_roots(jlo, jhi) == 1 && zp_sign_at(h, jlo) != zp_sign_at(h, jhi))
      return AlgebraicReal(h, {jlo, jhi, false});
    if (a.exact_) {
      // irrational sqrt of exact rational: isolate directly
      auto roots = zp_isolate_roots(h);
      for (auto& ri : roots) {
        if (ri.exact) {
          if (ri.lo > 0 && ri.lo * ri.lo == a.lo_) return AlgebraicReal(ri.lo);
          continue;
        }
        if (ri.hi <= 0) continue;
        AlgebraicReal cand(h, ri);
        // check cand^2 == a by sign of (cand^2 - a)
        AlgebraicReal sq = AlgebraicReal::mul(cand, cand);
        if (AlgebraicReal::compare(sq, a) == 0 && cand.sign() > 0) return cand;
      }
      throw DomainError("sqrt isolation failed");
    }
    a.refine_to((a.hi_ - a.lo_) / 16);
  }
}

AlgebraicReal AlgebraicReal::cbrt(const AlgebraicReal& a) {
  if (a.sign() == 0) return AlgebraicReal(QQ(0));
  if (a.exact_) {
    QQ v = a.lo_;
    ZZ n = v.get_num(), d = v.get_den();
    ZZ rn, rd;
    if (mpz_root(rn.get_mpz_t(), n.get_mpz_t(), 3) &&
        mpz_root(rd.get_mpz_t(), d.get_mpz_t(), 3))
      return AlgebraicReal(QQ(rn, rd));
  }
  ZPoly h = zp_squarefree(zp_compose_cube(a.f_));
  SturmChain st(h);
  while (true) {
    QQ jlo = root_bound(a.lo_, 3, false);
    QQ jhi = root_bound(a.hi_, 3, true);
    if (zp_sign_at(h, jlo) != 0 && zp_sign_at(h, jhi) != 0 &&
        st.count_roots(jlo, jhi) == 1 && zp_sign_at(h, jlo) != zp_sign_at(h, jhi))
      return AlgebraicReal(h, {jlo, jhi, false});
    if (a.exact_) {
      auto roots = zp_isolate_roots(h);
      for (auto& ri : roots) {
        AlgebraicReal cand = ri.exact ? AlgebraicReal(ri.lo) : AlgebraicReal(h, ri);
        AlgebraicReal cu = AlgebraicReal::mul(AlgebraicReal::mul(cand, cand), cand);
        if (AlgebraicReal::compare(cu, a) == 0) return cand;
      }
      throw DomainError("cbrt isolation failed");
    }
    a.refine_to((a.hi_ - a.lo_) / 16);
  }
}

int AlgebraicReal::compare(const AlgebraicReal& a, const AlgebraicReal& b) {
  if (a.exact_ && b.exact_) return sgn(QQ(a.lo_ - b.lo_));
  // quick interval separation first
  for (int round = 0; round < 8; round++) {
    if (a.hi_ < b.lo_) return -1;
    if (b.hi_ < a.lo_) return 1;
    if (!a.exact_)
      a.refine_to((a.hi_ - a.lo_) / 16);
    if (!b.exact_)
      b.refine_to((b.hi_ - b.lo_) / 16);
    if (a.exact_ && b.exact_) return sgn(QQ(a.lo_ - b.lo_));
  }
  return sub(a, b).sign();
}

}  // namespace dpa
