#pragma once
#include <gmpxx.h>

#include <string>
#include <utility>
#include <vector>

namespace dpa {

using ZZ = mpz_class;
using QQ = mpq_class;

// Univariate polynomial over Z, coefficient of x^i at c[i], no trailing zeros.
struct ZPoly {
  std::vector<ZZ> c;

  ZPoly() {}
  explicit ZPoly(std::vector<ZZ> cc) : c(std::move(cc)) { trim(); }
  static ZPoly constant(const ZZ& v) { return ZPoly(std::vector<ZZ>{v}); }
  // q*x - p, the defining polynomial of the rational p/q
  static ZPoly linear_root(const QQ& r);

  void trim() {
    while (!c.empty() && c.back() == 0) c.pop_back();
  }
  bool is_zero() const { return c.empty(); }
  int deg() const { return (int)c.size() - 1; }
  const ZZ& lc() const { return c.back(); }

  bool operator==(const ZPoly& o) const { return c == o.c; }
  std::string str() const;
};

ZPoly zp_add(const ZPoly& a, const ZPoly& b);
ZPoly zp_sub(const ZPoly& a, const ZPoly& b);
ZPoly zp_mul(const ZPoly& a, const ZPoly& b);
ZPoly zp_scale(const ZPoly& a, const ZZ& s);
ZPoly zp_neg(const ZPoly& a);
ZPoly zp_derivative(const ZPoly& a);
// exact division; aborts if not exact (internal use only)
ZPoly zp_divexact(const ZPoly& a, const ZZ& s);
ZZ zp_content(const ZPoly& a);  // nonnegative; 0 for the zero polynomial
ZPoly zp_primitive(const ZPoly& a);

// substitution helpers used by the algebraic-number constructions
ZPoly zp_compose_neg(const ZPoly& f);               // f(-x)
ZPoly zp_reverse(const ZPoly& f);                   // x^deg f(1/x)
ZPoly zp_compose_square(const ZPoly& f);            // f(x^2)
ZPoly zp_compose_cube(const ZPoly& f);              // f(x^3)
ZPoly zp_compose_rational_scale(const ZPoly& f, const QQ& r);  // roots scaled by r

QQ zp_eval_q(const ZPoly& f, const QQ& x);
int zp_sign_at(const ZPoly& f, const QQ& x);

// gcd via subresultant pseudo-remainders, returns primitive gcd with lc>0
ZPoly zp_gcd(const ZPoly& a, const ZPoly& b);
ZPoly zp_squarefree(const ZPoly& a);  // primitive squarefree part, lc>0

// Sturm chain of a squarefree polynomial; count roots in (a,b]
struct SturmChain {
  std::vector<ZPoly> seq;
  explicit SturmChain(const ZPoly& f);
  int variations_at(const QQ& x) const;
  int count_roots(const QQ& a, const QQ& b) const;  // roots in (a,b]
};

// all real roots of the squarefree f as disjoint isolating intervals
// (lo,hi] with f(lo)!=0; rational roots come out as degenerate [r,r]
struct RootInterval {
  QQ lo, hi;
  bool exact;  // lo==hi, a rational root
};
std::vector<RootInterval> zp_isolate_roots(const ZPoly& f);

// Polynomial in y whose coefficients live in Z[x]; used only to assemble
// Sylvester matrices for resultants.
struct ZPolyY {
  std::vector<ZPoly> c;  // c[i] multiplies y^i
  void trim() {
    while (!c.empty() && c.back().is_zero()) c.pop_back();
  }
  int deg() const { return (int)c.size() - 1; }
};

// res_y(A, B) for A, B in (Z[x])[y], via Bareiss elimination of the
// Sylvester matrix; exact over Z[x]
ZPoly zp_resultant_y(const ZPolyY& A, const ZPolyY& B);

}  // namespace dpa
