#include "dpa/interval.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dpa/error.hpp"

namespace dpa {

Ival Ival::from_rational(const mpq_class& q, mpfr_prec_t prec) {
  Ival r(prec);
  mpfr_set_q(r.lo_, q.get_mpq_t(), MPFR_RNDD);
  mpfr_set_q(r.hi_, q.get_mpq_t(), MPFR_RNDU);
  return r;
}

Ival Ival::from_rationals(const mpq_class& lo, const mpq_class& hi, mpfr_prec_t prec) {
  Ival r(prec);
  mpfr_set_q(r.lo_, lo.get_mpq_t(), MPFR_RNDD);
  mpfr_set_q(r.hi_, hi.get_mpq_t(), MPFR_RNDU);
  return r;
}

Ival Ival::from_double(double v, mpfr_prec_t prec) {
  Ival r(prec);
  mpfr_set_d(r.lo_, v, MPFR_RNDD);
  mpfr_set_d(r.hi_, v, MPFR_RNDU);
  return r;
}

Ival Ival::pi(mpfr_prec_t prec) {
  Ival r(prec);
  mpfr_const_pi(r.lo_, MPFR_RNDD);
  mpfr_const_pi(r.hi_, MPFR_RNDU);
  return r;
}

double Ival::mid_double() const {
  mpfr_t m;
  mpfr_init2(m, 64);
  mpfr_add(m, lo_, hi_, MPFR_RNDN);
  mpfr_div_2ui(m, m, 1, MPFR_RNDN);
  double v = mpfr_get_d(m, MPFR_RNDN);
  mpfr_clear(m);
  return v;
}

double Ival::lo_double() const { return mpfr_get_d(lo_, MPFR_RNDD); }
double Ival::hi_double() const { return mpfr_get_d(hi_, MPFR_RNDU); }

double Ival::rad_double() const {
  mpfr_t r;
  mpfr_init2(r, 64);
  mpfr_sub(r, hi_, lo_, MPFR_RNDU);
  mpfr_div_2ui(r, r, 1, MPFR_RNDU);
  double v = mpfr_get_d(r, MPFR_RNDU);
  mpfr_clear(r);
  // nextafter guards the final binary64 rounding
  return std::nextafter(v, INFINITY);
}

std::string Ival::str(int digits) const {
  char* s = nullptr;
  int rc = mpfr_asprintf(&s, "[%.*Rg, %.*Rg]", digits, lo_, digits, hi_);
  if (rc < 0) return "[?,?]";
  std::string out(s);
  mpfr_free_str(s);
  return out;
}

std::string Ival::mid_str(int digits) const {
  mpfr_t m;
  mpfr_prec_t p = std::max(mpfr_get_prec(lo_), mpfr_get_prec(hi_));
  mpfr_init2(m, p);
  mpfr_add(m, lo_, hi_, MPFR_RNDN);
  mpfr_div_2ui(m, m, 1, MPFR_RNDN);
  char* s = nullptr;
  int rc = mpfr_asprintf(&s, "%.*Rg", digits, m);
  mpfr_clear(m);
  if (rc < 0) return "?";
  std::string out(s);
  mpfr_free_str(s);
  return out;
}

Ival Ival::meet(const Ival& a, const Ival& b, mpfr_prec_t prec) {
  Ival r(prec);
  if (mpfr_cmp(a.lo_, b.lo_) >= 0)
    mpfr_set(r.lo_, a.lo_, MPFR_RNDD);
  else
    mpfr_set(r.lo_, b.lo_, MPFR_RNDD);
  if (mpfr_cmp(a.hi_, b.hi_) <= 0)
    mpfr_set(r.hi_, a.hi_, MPFR_RNDU);
  else
    mpfr_set(r.hi_, b.hi_, MPFR_RNDU);
  if (mpfr_cmp(r.lo_, r.hi_) > 0)
    throw DomainError("interval meet is empty: inconsistent enclosures");
  return r;
}

Ival Ival::add(const Ival& a, const Ival& b, mpfr_prec_t prec) {
  Ival r(prec);
  mpfr_add(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
  mpfr_add(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
  return r;
}

Ival Ival::sub(const Ival& a, const Ival& b, mpfr_prec_t prec) {
  Ival r(prec);
  mpfr_sub(r.lo_, a.lo_, b.hi_, MPFR_RNDD);
  mpfr_sub(r.hi_, a.hi_, b.lo_, MPFR_RNDU);
  return r;
}

Ival Ival::mul(const Ival& a, const Ival& b, mpfr_prec_t prec) {
  Ival r(prec);
  mpfr_t t;
  mpfr_init2(t, prec);
  bool first = true;
  const mpfr_srcptr as[2] = {a.lo_, a.hi_};
  const mpfr_srcptr bs[2] = {b.lo_, b.hi_};
  for (int i = 0; i < 2; i++)
    for (int j = 0; j < 2; j++) {
      mpfr_mul(t, as[i], bs[j], MPFR_RNDD);
      if (first || mpfr_cmp(t, r.lo_) < 0) mpfr_set(r.lo_, t, MPFR_RNDD);
      mpfr_mul(t, as[i], bs[j], MPFR_RNDU);
      if (first || mpfr_cmp(t, r.hi_) > 0) mpfr_set(r.hi_, t, MPFR_RNDU);
      first = false;
    }
  mpfr_clear(t);
  return r;
}

bool Ival::div(const Ival& a, const Ival& b, mpfr_prec_t prec, Ival& out) {
  if (b.contains_zero()) return false;
  Ival r(prec);
  mpfr_t t;
  mpfr_init2(t, prec);
  bool first = true;
  const mpfr_srcptr as[2] = {a.lo_, a.hi_};
  const mpfr_srcptr bs[2] = {b.lo_, b.hi_};
  for (int i = 0; i < 2; i++)
    for (int j = 0; j < 2; j++) {
      mpfr_div(t, as[i], bs[j], MPFR_RNDD);
      if (first || mpfr_cmp(t, r.lo_) < 0) mpfr_set(r.lo_, t, MPFR_RNDD);
      mpfr_div(t, as[i], bs[j], MPFR_RNDU);
      if (first || mpfr_cmp(t, r.hi_) > 0) mpfr_set(r.hi_, t, MPFR_RNDU);
      first = false;
    }
  mpfr_clear(t);
  out = r;
  return true;
}

Ival Ival::neg(const Ival& a, mpfr_prec_t prec) {
  Ival r(prec);
  mpfr_neg(r.lo_, a.hi_, MPFR_RNDD);
  mpfr_neg(r.hi_, a.lo_, MPFR_RNDU);
  return r;
}

Ival Ival::abs(const Ival& a, mpfr_prec_t prec) {
  Ival r(prec);
  if (mpfr_sgn(a.lo_) >= 0) {
    mpfr_set(r.lo_, a.lo_, MPFR_RNDD);
    mpfr_set(r.hi_, a.hi_, MPFR_RNDU);
  } else if (mpfr_sgn(a.hi_) <= 0) {
    mpfr_neg(r.lo_, a.hi_, MPFR_RNDD);
    mpfr_neg(r.hi_, a.lo_, MPFR_RNDU);
  } else {
    mpfr_set_zero(r.lo_, 1);
    mpfr_neg(r.hi_, a.lo_, MPFR_RNDU);
    if (mpfr_cmp(r.hi_, a.hi_) < 0) mpfr_set(r.hi_, a.hi_, MPFR_RNDU);
  }
  return r;
}

Ival Ival::min(const Ival& a, const Ival& b, mpfr_prec_t prec) {
  Ival r(prec);
  mpfr_min(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
  mpfr_min(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
  return r;
}

Ival Ival::max(const Ival& a, const Ival& b, mpfr_prec_t prec) {
  Ival r(prec);
  mpfr_max(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
  mpfr_max(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
  return r;
}

bool Ival::sqrt(const Ival& a, mpfr_prec_t prec, Ival& out) {
  if (mpfr_sgn(a.hi_) < 0) return false;
  Ival r(prec);
  if (mpfr_sgn(a.lo_) <= 0)
    mpfr_set_zero(r.lo_, 1);
  else
    mpfr_sqrt(r.lo_, a.lo_, MPFR_RNDD);
  mpfr_sqrt(r.hi_, a.hi_, MPFR_RNDU);
  out = r;
  return true;
}

Ival Ival::cbrt(const Ival& a, mpfr_prec_t prec) {
  Ival r(prec);
  mpfr_cbrt(r.lo_, a.lo_, MPFR_RNDD);
  mpfr_cbrt(r.hi_, a.hi_, MPFR_RNDU);
  return r;
}

Ival Ival::exp(const Ival& a, mpfr_prec_t prec) {
  Ival r(prec);
  mpfr_exp(r.lo_, a.lo_, MPFR_RNDD);
  mpfr_exp(r.hi_, a.hi_, MPFR_RNDU);
  return r;
}

bool Ival::log(const Ival& a, mpfr_prec_t prec, Ival& out) {
  if (mpfr_sgn(a.lo_) <= 0) return false;
  Ival r(prec);
  mpfr_log(r.lo_, a.lo_, MPFR_RNDD);
  mpfr_log(r.hi_, a.hi_, MPFR_RNDU);
  out = r;
  return true;
}

mpq_class mpfr_to_rational(const mpfr_t& x) {
  if (!mpfr_number_p(x)) throw DomainError("non-finite mpfr endpoint");
  if (mpfr_zero_p(x)) return mpq_class(0);
  mpz_class man;
  mpfr_exp_t e = mpfr_get_z_2exp(man.get_mpz_t(), x);
  mpq_class q(man);
  if (e >= 0) {
    mpz_class p;
    mpz_mul_2exp(p.get_mpz_t(), man.get_mpz_t(), (mp_bitcnt_t)e);
    q = mpq_class(p);
  } else {
    mpz_class den(1);
    mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), (mp_bitcnt_t)(-e));
    q = mpq_class(man, den);
    q.canonicalize();
  }
  return q;
}

}  // namespace dpa
