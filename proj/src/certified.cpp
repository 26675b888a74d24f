#include "dpa/certified.hpp"

#include <cmath>
#include <cstdlib>
#include <mutex>
#include <vector>

#include "dpa/error.hpp"

namespace dpa {

mpfr_prec_t default_precision() {
  static mpfr_prec_t p = [] {
    if (const char* e = std::getenv("NF_PRECISION_BITS")) {
      long v = std::atol(e);
      if (v >= 24 && v <= 1 << 20) return (mpfr_prec_t)v;
    }
    return (mpfr_prec_t)128;
  }();
  return p;
}

mpfr_prec_t precision_cap() {
  static mpfr_prec_t p = [] {
    mpfr_prec_t c = 8192;
    if (c < 2 * default_precision()) c = 2 * default_precision();
    return c;
  }();
  return p;
}

namespace {
// thrown internally when a domain condition (nonzero divisor, positive log
// argument) is not yet separated at the current precision
struct RefineNeeded {};
struct NotAlgebraic {};
}  // namespace

enum class NK {
  Rational,
  Algebraic,
  CfGen,
  Pi,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Abs,
  Min,
  Max,
  Sqrt,
  Cbrt,
  Exp,
  Log,
};

struct CNode {
  NK kind;
  QQ q;  // Rational
  std::optional<AlgebraicReal> atom;
  std::function<ZZ(int)> cf;  // CfGen
  std::shared_ptr<const CNode> a, b;
  std::string label;

  mutable std::mutex mu;
  mutable std::optional<Ival> cache;  // tightest enclosure seen so far
  mutable mpfr_prec_t cache_prec = 0;
  mutable std::optional<AlgebraicReal> alg_cache;
  mutable bool alg_failed = false;
  // CfGen: partial quotients a_1.. and convergents p_j/q_j with
  // p0=0,q0=1, p1=1,q1=a1 (index 0 of the arrays holds j=0)
  mutable std::vector<ZZ> cf_a, cf_p, cf_q;
};

namespace {

using NodePtr = std::shared_ptr<const CNode>;

NodePtr make_rational(const QQ& q) {
  auto n = std::make_shared<CNode>();
  n->kind = NK::Rational;
  n->q = q;
  n->q.canonicalize();
  return n;
}

bool is_rat(const NodePtr& n, const QQ& v) {
  return n->kind == NK::Rational && n->q == v;
}

NodePtr make_binary(NK k, NodePtr a, NodePtr b) {
  // constant folding keeps the DAGs produced by norm/threshold formulas small
  if (a->kind == NK::Rational && b->kind == NK::Rational) {
    switch (k) {
      case NK::Add:
        return make_rational(a->q + b->q);
      case NK::Sub:
        return make_rational(a->q - b->q);
      case NK::Mul:
        return make_rational(a->q * b->q);
      case NK::Div:
        if (b->q == 0) throw DomainError("division by zero");
        return make_rational(a->q / b->q);
      case NK::Min:
        return make_rational(a->q <= b->q ? a->q : b->q);
      case NK::Max:
        return make_rational(a->q >= b->q ? a->q : b->q);
      default:
        break;
    }
  }
  if (k == NK::Add) {
    if (is_rat(a, 0)) return b;
    if (is_rat(b, 0)) return a;
  }
  if (k == NK::Sub && is_rat(b, 0)) return a;
  if (k == NK::Mul) {
    if (is_rat(a, 0) || is_rat(b, 0)) return make_rational(0);
    if (is_rat(a, 1)) return b;
    if (is_rat(b, 1)) return a;
  }
  if (k == NK::Div) {
    if (b->kind == NK::Rational && b->q == 0) throw DomainError("division by zero");
    if (is_rat(b, 1)) return a;
  }
  auto n = std::make_shared<CNode>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr make_unary(NK k, NodePtr a) {
  if (a->kind == NK::Rational) {
    switch (k) {
      case NK::Neg:
        return make_rational(-a->q);
      case NK::Abs:
        return make_rational(::abs(a->q));
      case NK::Sqrt: {
        if (a->q < 0) throw DomainError("sqrt of negative rational");
        ZZ nr, dr;
        if (mpz_perfect_square_p(a->q.get_num_mpz_t()) &&
            mpz_perfect_square_p(a->q.get_den_mpz_t())) {
          mpz_sqrt(nr.get_mpz_t(), a->q.get_num_mpz_t());
          mpz_sqrt(dr.get_mpz_t(), a->q.get_den_mpz_t());
          return make_rational(QQ(nr, dr));
        }
        break;
      }
      default:
        break;
    }
  }
  if (k == NK::Neg && a->kind == NK::Neg) return a->a;
  auto n = std::make_shared<CNode>();
  n->kind = k;
  n->a = std::move(a);
  return n;
}

// --- continued-fraction generator: extend convergents until the enclosure
// [p_j/q_j, p_{j+1}/q_{j+1}] has width 1/(q_j q_{j+1}) <= 2^-bits
void cf_extend(const CNode& n, mpfr_prec_t bits) {
  std::lock_guard<std::mutex> lk(n.mu);
  if (n.cf_p.empty()) {
    n.cf_p = {ZZ(0)};
    n.cf_q = {ZZ(1)};
  }
  auto width_ok = [&] {
    if (n.cf_p.size() < 2) return false;
    ZZ prod = n.cf_q[n.cf_q.size() - 1] * n.cf_q[n.cf_q.size() - 2];
    return mpz_sizeinbase(prod.get_mpz_t(), 2) >= (size_t)bits + 2;
  };
  while (!width_ok()) {
    int j = (int)n.cf_a.size() + 1;
    if (j > 4'000'000) throw BudgetError("continued-fraction generator refinement exceeded budget");
    ZZ aj = n.cf(j);
    if (aj < 1) throw DomainError("partial quotient a_" + std::to_string(j) + " < 1");
    n.cf_a.push_back(aj);
    size_t m = n.cf_p.size();
    ZZ p = (m >= 2) ? ZZ(aj * n.cf_p[m - 1] + n.cf_p[m - 2]) : ZZ(aj * n.cf_p[m - 1] + 1);
    ZZ q = (m >= 2) ? ZZ(aj * n.cf_q[m - 1] + n.cf_q[m - 2]) : ZZ(aj * n.cf_q[m - 1]);
    n.cf_p.push_back(p);
    n.cf_q.push_back(q);
  }
}

Ival cf_enclosure(const CNode& n, mpfr_prec_t prec) {
  cf_extend(n, prec);
  std::lock_guard<std::mutex> lk(n.mu);
  size_t m = n.cf_p.size();
  QQ u(n.cf_p[m - 2], n.cf_q[m - 2]);
  QQ v(n.cf_p[m - 1], n.cf_q[m - 1]);
  u.canonicalize();
  v.canonicalize();
  if (u > v) std::swap(u, v);
  return Ival::from_rationals(u, v, prec);
}

Ival eval(const CNode& n, mpfr_prec_t prec);

Ival eval_fresh(const CNode& n, mpfr_prec_t prec) {
  switch (n.kind) {
    case NK::Rational:
      return Ival::from_rational(n.q, prec);
    case NK::Algebraic: {
      // refine_to mutates the shared isolating interval; serialize per node
      std::lock_guard<std::mutex> lk(n.mu);
      ZZ den(1);
      mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), (mp_bitcnt_t)prec + 4);
      n.atom->refine_to(QQ(ZZ(1), den));
      return Ival::from_rationals(n.atom->lo(), n.atom->hi(), prec);
    }
    case NK::CfGen:
      return cf_enclosure(n, prec);
    case NK::Pi:
      return Ival::pi(prec);
    case NK::Add:
      return Ival::add(eval(*n.a, prec), eval(*n.b, prec), prec);
    case NK::Sub:
      return Ival::sub(eval(*n.a, prec), eval(*n.b, prec), prec);
    case NK::Mul:
      return Ival::mul(eval(*n.a, prec), eval(*n.b, prec), prec);
    case NK::Div: {
      Ival out;
      if (!Ival::div(eval(*n.a, prec), eval(*n.b, prec), prec, out)) throw RefineNeeded{};
      return out;
    }
    case NK::Neg:
      return Ival::neg(eval(*n.a, prec), prec);
    case NK::Abs:
      return Ival::abs(eval(*n.a, prec), prec);
    case NK::Min:
      return Ival::min(eval(*n.a, prec), eval(*n.b, prec), prec);
    case NK::Max:
      return Ival::max(eval(*n.a, prec), eval(*n.b, prec), prec);
    case NK::Sqrt: {
      Ival out;
      if (!Ival::sqrt(eval(*n.a, prec), prec, out))
        throw DomainError("sqrt of provably negative value");
      return out;
    }
    case NK::Cbrt:
      return Ival::cbrt(eval(*n.a, prec), prec);
    case NK::Exp:
      return Ival::exp(eval(*n.a, prec), prec);
    case NK::Log: {
      Ival out;
      if (!Ival::log(eval(*n.a, prec), prec, out)) throw RefineNeeded{};
      return out;
    }
  }
  throw Error("unreachable node kind");
}

Ival eval(const CNode& n, mpfr_prec_t prec) {
  {
    std::lock_guard<std::mutex> lk(n.mu);
    if (n.cache && n.cache_prec >= prec) return *n.cache;
  }
  Ival fresh = eval_fresh(n, prec);
  std::lock_guard<std::mutex> lk(n.mu);
  if (n.cache) {
    // successive enclosures of the same value may only shrink
    mpfr_prec_t p = std::max(prec, n.cache_prec);
    n.cache = Ival::meet(*n.cache, fresh, p);
    n.cache_prec = std::max(n.cache_prec, prec);
  } else {
    n.cache = fresh;
    n.cache_prec = prec;
  }
  return *n.cache;
}

AlgebraicReal to_alg(const CNode& n);

AlgebraicReal to_alg_fresh(const CNode& n) {
  switch (n.kind) {
    case NK::Rational:
      return AlgebraicReal(n.q);
    case NK::Algebraic: {
      std::lock_guard<std::mutex> lk(n.mu);  // copy races with refinement
      return *n.atom;
    }
    case NK::CfGen:
    case NK::Pi:
    case NK::Exp:
    case NK::Log:
      throw NotAlgebraic{};
    case NK::Add:
      return AlgebraicReal::add(to_alg(*n.a), to_alg(*n.b));
    case NK::Sub:
      return AlgebraicReal::sub(to_alg(*n.a), to_alg(*n.b));
    case NK::Mul:
      return AlgebraicReal::mul(to_alg(*n.a), to_alg(*n.b));
    case NK::Div:
      return AlgebraicReal::div(to_alg(*n.a), to_alg(*n.b));
    case NK::Neg:
      return AlgebraicReal::neg(to_alg(*n.a));
    case NK::Abs:
      return AlgebraicReal::abs(to_alg(*n.a));
    case NK::Min: {
      AlgebraicReal x = to_alg(*n.a), y = to_alg(*n.b);
      return AlgebraicReal::compare(x, y) <= 0 ? x : y;
    }
    case NK::Max: {
      AlgebraicReal x = to_alg(*n.a), y = to_alg(*n.b);
      return AlgebraicReal::compare(x, y) >= 0 ? x : y;
    }
    case NK::Sqrt:
      return AlgebraicReal::sqrt(to_alg(*n.a));
    case NK::Cbrt:
      return AlgebraicReal::cbrt(to_alg(*n.a));
  }
  throw Error("unreachable node kind");
}

AlgebraicReal to_alg(const CNode& n) {
  {
    std::lock_guard<std::mutex> lk(n.mu);
    if (n.alg_cache) return *n.alg_cache;
    if (n.alg_failed) throw NotAlgebraic{};
  }
  try {
    AlgebraicReal a = to_alg_fresh(n);
    std::lock_guard<std::mutex> lk(n.mu);
    if (!n.alg_cache) n.alg_cache = a;
    return *n.alg_cache;
  } catch (const NotAlgebraic&) {
    std::lock_guard<std::mutex> lk(n.mu);
    n.alg_failed = true;
    throw;
  }
}

// evaluate with internal retry when a domain condition is unresolved
Ival eval_refining(const CNode& n, mpfr_prec_t prec) {
  for (mpfr_prec_t p = prec; p <= precision_cap(); p *= 2) {
    try {
      return eval(n, p);
    } catch (const RefineNeeded&) {
      if (p * 2 > precision_cap())
        throw UndecidableError(
            "domain condition (nonzero divisor / positive log argument) "
            "unresolved at precision cap");
    }
  }
  throw UndecidableError("enclosure refinement exceeded precision cap");
}

}  // namespace

CReal::CReal() : n_(make_rational(QQ(0))) {}

CReal CReal::rational(const QQ& q) { return CReal(make_rational(q)); }
CReal CReal::integer(long v) { return CReal(make_rational(QQ(v))); }
CReal CReal::integer(const ZZ& v) { return CReal(make_rational(QQ(v))); }

CReal CReal::from_double(double v) {
  if (!std::isfinite(v)) throw DomainError("non-finite double");
  return CReal(make_rational(QQ(v)));
}

CReal CReal::algebraic(const AlgebraicReal& a, const std::string& label) {
  if (a.is_exact()) return rational(a.rational());
  auto n = std::make_shared<CNode>();
  n->kind = NK::Algebraic;
  n->atom = a;
  n->label = label;
  return CReal(n);
}

CReal CReal::sqrt_int(const ZZ& m) { return rational(QQ(m)).sqrt(); }
CReal CReal::cbrt_int(const ZZ& m) { return rational(QQ(m)).cbrt(); }

CReal CReal::golden() {
  ZPoly p;
  p.c = {ZZ(-1), ZZ(1), ZZ(1)};  // x^2 + x - 1
  return algebraic(AlgebraicReal(p, RootInterval{QQ(0), QQ(1), false}), "golden");
}

CReal CReal::root_of(const ZPoly& p, int index_one_based) {
  ZPoly sf = zp_squarefree(p);
  auto roots = zp_isolate_roots(sf);
  if (index_one_based < 1 || (size_t)index_one_based > roots.size())
    throw DomainError("root index out of range: polynomial has " +
                      std::to_string(roots.size()) + " real roots");
  const auto& r = roots[index_one_based - 1];
  if (r.exact) return rational(r.lo);
  return algebraic(AlgebraicReal(sf, r));
}

CReal CReal::pi() {
  auto n = std::make_shared<CNode>();
  n->kind = NK::Pi;
  return CReal(n);
}

CReal CReal::from_partial_quotients(std::function<ZZ(int)> a, const std::string& label) {
  auto n = std::make_shared<CNode>();
  n->kind = NK::CfGen;
  n->cf = std::move(a);
  n->label = label;
  return CReal(n);
}

CReal CReal::operator+(const CReal& o) const { return CReal(make_binary(NK::Add, n_, o.n_)); }
CReal CReal::operator-(const CReal& o) const { return CReal(make_binary(NK::Sub, n_, o.n_)); }
CReal CReal::operator*(const CReal& o) const { return CReal(make_binary(NK::Mul, n_, o.n_)); }
CReal CReal::operator/(const CReal& o) const { return CReal(make_binary(NK::Div, n_, o.n_)); }
CReal CReal::neg() const { return CReal(make_unary(NK::Neg, n_)); }
CReal CReal::abs() const { return CReal(make_unary(NK::Abs, n_)); }
CReal CReal::sqrt() const { return CReal(make_unary(NK::Sqrt, n_)); }
CReal CReal::cbrt() const { return CReal(make_unary(NK::Cbrt, n_)); }
CReal CReal::exp() const { return CReal(make_unary(NK::Exp, n_)); }
CReal CReal::log() const { return CReal(make_unary(NK::Log, n_)); }

CReal CReal::pow_int(long e) const {
  if (e == 0) return integer(1);
  bool inv = e < 0;
  unsigned long k = inv ? (unsigned long)(-(e + 1)) + 1 : (unsigned long)e;
  CReal acc = integer(1), base = *this;
  while (k) {
    if (k & 1) acc = acc * base;
    base = base * base;
    k >>= 1;
  }
  return inv ? integer(1) / acc : acc;
}

CReal CReal::min(const CReal& a, const CReal& b) {
  return CReal(make_binary(NK::Min, a.n_, b.n_));
}
CReal CReal::max(const CReal& a, const CReal& b) {
  return CReal(make_binary(NK::Max, a.n_, b.n_));
}

Ival CReal::enclosure(mpfr_prec_t prec) const {
  if (prec <= 0) prec = default_precision();
  return eval_refining(*n_, prec);
}

double CReal::to_double() const { return enclosure(96).mid_double(); }

std::pair<double, double> CReal::to_double_bounds() const {
  Ival iv = enclosure(96);
  return {iv.lo_double(), iv.hi_double()};
}

std::string CReal::str(int digits) const {
  mpfr_prec_t p = std::max<mpfr_prec_t>(default_precision(), (mpfr_prec_t)(digits * 4 + 32));
  if (p > precision_cap()) p = precision_cap();
  return enclosure(p).mid_str(digits);
}

std::string CReal::interval_str(int digits) const { return enclosure().str(digits); }

bool CReal::is_rational() const { return n_->kind == NK::Rational; }

QQ CReal::as_rational() const {
  if (!is_rational()) throw DomainError("not a rational node");
  return n_->q;
}

bool CReal::has_prescribed_quotients() const { return n_->kind == NK::CfGen; }

ZZ CReal::prescribed_quotient(int j) const {
  if (!has_prescribed_quotients()) throw DomainError("no prescribed quotients");
  if (j < 1) throw DomainError("quotient index must be >= 1");
  ZZ aj = n_->cf(j);
  if (aj < 1) throw DomainError("partial quotient a_" + std::to_string(j) + " < 1");
  return aj;
}

Cmp certified_compare(const CReal& a, const CReal& b) {
  if (a.n_ == b.n_) return Cmp::EQ;
  if (a.n_->kind == NK::Rational && b.n_->kind == NK::Rational) {
    int c = cmp(a.n_->q, b.n_->q);
    return c < 0 ? Cmp::LT : (c > 0 ? Cmp::GT : Cmp::EQ);
  }
  NodePtr diff = make_binary(NK::Sub, a.n_, b.n_);
  if (diff->kind == NK::Rational) {
    int s = sgn(diff->q);
    return s < 0 ? Cmp::LT : (s > 0 ? Cmp::GT : Cmp::EQ);
  }
  bool alg_tried = false;
  for (mpfr_prec_t p = default_precision(); p <= precision_cap(); p *= 2) {
    try {
      Ival iv = eval(*diff, p);
      int s = iv.sign();
      if (s < 0) return Cmp::LT;
      if (s > 0) return Cmp::GT;
      if (iv.is_exact_zero()) return Cmp::EQ;
    } catch (const RefineNeeded&) {
      // divisor/log domain unresolved; fall through to refine or decide exactly
    }
    if (!alg_tried && p >= 4 * default_precision()) {
      alg_tried = true;
      try {
        int s = to_alg(*diff).sign();
        return s < 0 ? Cmp::LT : (s > 0 ? Cmp::GT : Cmp::EQ);
      } catch (const NotAlgebraic&) {
      }
    }
  }
  if (!alg_tried) {
    try {
      int s = to_alg(*diff).sign();
      return s < 0 ? Cmp::LT : (s > 0 ? Cmp::GT : Cmp::EQ);
    } catch (const NotAlgebraic&) {
    }
  }
  throw UndecidableError("comparison undecided at precision cap " +
                         std::to_string((long)precision_cap()) + " bits");
}

int certified_sign(const CReal& a) {
  Cmp c = certified_compare(a, CReal());
  return c == Cmp::LT ? -1 : (c == Cmp::GT ? 1 : 0);
}

bool not_provably_greater(const CReal& a, const CReal& b) {
  try {
    return certified_compare(a, b) != Cmp::GT;
  } catch (const UndecidableError&) {
    return true;  // could not separate: no proof of violation
  }
}

ZZ certified_floor(const CReal& a) {
  if (a.is_rational()) {
    ZZ f;
    mpz_fdiv_q(f.get_mpz_t(), a.as_rational().get_num_mpz_t(), a.as_rational().get_den_mpz_t());
    return f;
  }
  for (mpfr_prec_t p = default_precision(); p <= precision_cap(); p *= 2) {
    Ival iv = a.enclosure(p);
    QQ lo = mpfr_to_rational(iv.lo());
    QQ hi = mpfr_to_rational(iv.hi());
    ZZ flo, fhi;
    mpz_fdiv_q(flo.get_mpz_t(), lo.get_num_mpz_t(), lo.get_den_mpz_t());
    mpz_fdiv_q(fhi.get_mpz_t(), hi.get_num_mpz_t(), hi.get_den_mpz_t());
    if (flo == fhi) return flo;
    if (fhi == flo + 1) {
      // boundary case: decide against the integer fhi exactly
      Cmp c = certified_compare(a, CReal::integer(fhi));
      return c == Cmp::LT ? flo : fhi;
    }
  }
  throw UndecidableError("floor undecided at precision cap");
}

ZZ certified_ceil(const CReal& a) {
  return -certified_floor(a.neg());
}

}  // namespace dpa
