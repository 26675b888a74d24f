#pragma once
#include "dpa/intpoly.hpp"

namespace dpa {

// A real algebraic number: a squarefree primitive defining polynomial
// (lc > 0) together with an isolating interval [lo,hi] containing exactly
// one root.  Rational numbers are stored exactly with a degree-1 polynomial
// and lo == hi.  Signs and equality are decidable, which is what makes
// certified comparisons able to return EQ.
class AlgebraicReal {
 public:
  AlgebraicReal() : AlgebraicReal(QQ(0)) {}
  explicit AlgebraicReal(const QQ& r);
  // the root of f isolated by ri
  AlgebraicReal(const ZPoly& f, const RootInterval& ri);

  bool is_exact() const { return exact_; }
  const QQ& rational() const { return lo_; }  // valid when is_exact()
  const ZPoly& poly() const { return f_; }
  const QQ& lo() const { return lo_; }
  const QQ& hi() const { return hi_; }

  int sign() const;
  bool is_zero() const { return sign() == 0; }

  // shrink the isolating interval until hi-lo <= width (no-op when exact)
  void refine_to(const QQ& width) const;

  static AlgebraicReal add(const AlgebraicReal& a, const AlgebraicReal& b);
  static AlgebraicReal sub(const AlgebraicReal& a, const AlgebraicReal& b);
  static AlgebraicReal mul(const AlgebraicReal& a, const AlgebraicReal& b);
  static AlgebraicReal div(const AlgebraicReal& a, const AlgebraicReal& b);
  static AlgebraicReal neg(const AlgebraicReal& a);
  static AlgebraicReal abs(const AlgebraicReal& a);
  static AlgebraicReal sqrt(const AlgebraicReal& a);
  static AlgebraicReal cbrt(const AlgebraicReal& a);

  static AlgebraicReal add_rational(const AlgebraicReal& a, const QQ& r);
  static AlgebraicReal mul_rational(const AlgebraicReal& a, const QQ& r);
  static AlgebraicReal inverse(const AlgebraicReal& a);

  // sign of (a - b); cheaper than building the difference when both exact
  static int compare(const AlgebraicReal& a, const AlgebraicReal& b);

 private:
  ZPoly f_;
  mutable QQ lo_, hi_;
  bool exact_;

  void bisect_once() const;
  friend AlgebraicReal alg_from_resultant(const ZPoly& h, const AlgebraicReal& a,
                                          const AlgebraicReal& b, int op);
};

}  // namespace dpa
