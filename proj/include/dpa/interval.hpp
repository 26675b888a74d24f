#pragma once
#include <gmpxx.h>
#include <mpfr.h>

#include <string>

namespace dpa {

// Closed interval [lo,hi] with mpfr endpoints.  Every operation rounds
// outward, so the true value of an expression is always contained in the
// interval computed for it.
class Ival {
 public:
  Ival() : Ival(64) {}
  explicit Ival(mpfr_prec_t prec) {
    mpfr_init2(lo_, prec);
    mpfr_init2(hi_, prec);
    mpfr_set_zero(lo_, 1);
    mpfr_set_zero(hi_, 1);
  }
  Ival(const Ival& o) : Ival(std::max(mpfr_get_prec(o.lo_), mpfr_get_prec(o.hi_))) {
    mpfr_set(lo_, o.lo_, MPFR_RNDD);
    mpfr_set(hi_, o.hi_, MPFR_RNDU);
  }
  Ival(Ival&& o) noexcept {
    mpfr_init2(lo_, 2);
    mpfr_init2(hi_, 2);
    mpfr_swap(lo_, o.lo_);
    mpfr_swap(hi_, o.hi_);
  }
  Ival& operator=(Ival o) {
    mpfr_swap(lo_, o.lo_);
    mpfr_swap(hi_, o.hi_);
    return *this;
  }
  ~Ival() {
    mpfr_clear(lo_);
    mpfr_clear(hi_);
  }

  static Ival from_rational(const mpq_class& q, mpfr_prec_t prec);
  static Ival from_rationals(const mpq_class& lo, const mpq_class& hi, mpfr_prec_t prec);
  static Ival from_double(double v, mpfr_prec_t prec);
  static Ival pi(mpfr_prec_t prec);

  const mpfr_t& lo() const { return lo_; }
  const mpfr_t& hi() const { return hi_; }
  mpfr_t& lo() { return lo_; }
  mpfr_t& hi() { return hi_; }

  bool contains_zero() const {
    return mpfr_sgn(lo_) <= 0 && mpfr_sgn(hi_) >= 0;
  }
  // sign of every point in the interval: -1, +1, or 0 when undecided
  int sign() const {
    if (mpfr_sgn(lo_) > 0) return 1;
    if (mpfr_sgn(hi_) < 0) return -1;
    return 0;
  }
  bool is_point() const { return mpfr_equal_p(lo_, hi_); }
  bool is_exact_zero() const { return mpfr_zero_p(lo_) && mpfr_zero_p(hi_); }

  double mid_double() const;
  double lo_double() const;  // rounded down
  double hi_double() const;  // rounded up
  // radius as a double, rounded up; infinite if endpoints are not finite
  double rad_double() const;
  std::string str(int digits = 20) const;
  std::string mid_str(int digits = 20) const;

  // intersection, used to keep cached enclosures monotone under refinement
  static Ival meet(const Ival& a, const Ival& b, mpfr_prec_t prec);

  static Ival add(const Ival& a, const Ival& b, mpfr_prec_t prec);
  static Ival sub(const Ival& a, const Ival& b, mpfr_prec_t prec);
  static Ival mul(const Ival& a, const Ival& b, mpfr_prec_t prec);
  // throws DomainError if b provably zero; returns whole-line style wide
  // interval never: instead throws UndecidableError-like flag via ok=false
  static bool div(const Ival& a, const Ival& b, mpfr_prec_t prec, Ival& out);
  static Ival neg(const Ival& a, mpfr_prec_t prec);
  static Ival abs(const Ival& a, mpfr_prec_t prec);
  static Ival min(const Ival& a, const Ival& b, mpfr_prec_t prec);
  static Ival max(const Ival& a, const Ival& b, mpfr_prec_t prec);
  // sqrt of the nonnegative part; ok=false if a.hi < 0
  static bool sqrt(const Ival& a, mpfr_prec_t prec, Ival& out);
  static Ival cbrt(const Ival& a, mpfr_prec_t prec);
  static Ival exp(const Ival& a, mpfr_prec_t prec);
  // ok=false unless a.lo > 0
  static bool log(const Ival& a, mpfr_prec_t prec, Ival& out);

 private:
  mpfr_t lo_, hi_;
};

// exact conversion of an mpfr endpoint to a rational (finite values only)
mpq_class mpfr_to_rational(const mpfr_t& x);

}  // namespace dpa
