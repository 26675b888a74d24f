#pragma once
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "dpa/algebraic.hpp"
#include "dpa/interval.hpp"

namespace dpa {

enum class Cmp { LT, EQ, GT };

// default working precision in bits (env NF_PRECISION_BITS overrides) and
// the hard cap for doubling refinement
mpfr_prec_t default_precision();
mpfr_prec_t precision_cap();

struct CNode;

// Immutable exact real number: an expression DAG over rationals, real
// algebraic atoms, continued-fraction generators and a few transcendental
// operations.  Enclosures are evaluated with outward-rounded mpfr intervals
// and refined by doubling the precision; comparisons additionally fall back
// to exact algebraic-number arithmetic, so EQ is returned only when provable.
class CReal {
 public:
  CReal();  // zero
  static CReal rational(const QQ& q);
  static CReal integer(long v);
  static CReal integer(const ZZ& v);
  static CReal from_double(double v);  // doubles are exact dyadic rationals
  static CReal algebraic(const AlgebraicReal& a, const std::string& label = "");
  static CReal sqrt_int(const ZZ& m);
  static CReal cbrt_int(const ZZ& m);
  static CReal golden();  // (sqrt 5 - 1)/2, the root of x^2+x-1 in (0,1)
  static CReal root_of(const ZPoly& p, int index_one_based);
  static CReal pi();
  // number in (0,1) with prescribed continued-fraction partial quotients
  // a_1, a_2, ... (the callback must return values >= 1 for every j >= 1)
  static CReal from_partial_quotients(std::function<ZZ(int)> a, const std::string& label);

  CReal operator+(const CReal& o) const;
  CReal operator-(const CReal& o) const;
  CReal operator*(const CReal& o) const;
  CReal operator/(const CReal& o) const;
  CReal neg() const;
  CReal abs() const;
  CReal sqrt() const;
  CReal cbrt() const;
  CReal exp() const;
  CReal log() const;
  CReal pow_int(long e) const;
  static CReal min(const CReal& a, const CReal& b);
  static CReal max(const CReal& a, const CReal& b);

  // enclosure at the given precision; refines domain conditions internally,
  // throws UndecidableError if they cannot be established below the cap
  Ival enclosure(mpfr_prec_t prec = 0) const;
  double to_double() const;
  std::pair<double, double> to_double_bounds() const;
  std::string str(int digits = 17) const;
  std::string interval_str(int digits = 20) const;

  bool is_rational() const;
  QQ as_rational() const;  // only when is_rational()

  // continued-fraction generator access (for contfrac shortcuts)
  bool has_prescribed_quotients() const;
  ZZ prescribed_quotient(int j) const;  // a_j, j >= 1

  const std::shared_ptr<const CNode>& node() const { return n_; }

 private:
  explicit CReal(std::shared_ptr<const CNode> n) : n_(std::move(n)) {}
  std::shared_ptr<const CNode> n_;
  friend Cmp certified_compare(const CReal&, const CReal&);
  friend int certified_sign(const CReal&);
  friend class CNodeAccess;
};

// three-way comparison; throws UndecidableError when the difference cannot
// be separated at the precision cap and has no algebraic form
Cmp certified_compare(const CReal& a, const CReal& b);
int certified_sign(const CReal& a);  // -1, 0, +1 with the same guarantees

inline bool certified_lt(const CReal& a, const CReal& b) {
  return certified_compare(a, b) == Cmp::LT;
}
inline bool certified_le(const CReal& a, const CReal& b) {
  return certified_compare(a, b) != Cmp::GT;
}
// a check that must not reject truth: passes unless a > b is provable
bool not_provably_greater(const CReal& a, const CReal& b);

ZZ certified_floor(const CReal& a);
ZZ certified_ceil(const CReal& a);

}  // namespace dpa
