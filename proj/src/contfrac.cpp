#include "dpa/contfrac.hpp"

#include <cmath>
#include <mutex>

#include "dpa/error.hpp"

namespace dpa {

namespace {

constexpr int kMaxDepth = 100000;

double pad_lo(double v) { return std::nextafter(v, -1.0 / 0.0); }
double pad_hi(double v) { return std::nextafter(v, 1.0 / 0.0); }

}  // namespace

ContinuedFractionState::ContinuedFractionState(const CReal& xi, int j_max)
    : xi_(xi), remainder_(xi) {
  if (certified_sign(xi_) <= 0 || certified_compare(xi_, CReal::integer(1)) != Cmp::LT)
    throw DomainError("continued fractions require xi in (0,1)");
  prescribed_ = xi_.has_prescribed_quotients();
  // j = -1 and j = 0 seed rows: p_{-1}/q_{-1} = 1/0, p_0/q_0 = 0/1
  p_ = {ZZ(1), ZZ(0)};
  q_ = {ZZ(0), ZZ(1)};
  resid_.push_back(xi_);
  def_.push_back(xi_);
  def_d_.push_back(xi_.to_double_bounds());
  extend_locked(j_max);
}

ContinuedFractionState ContinuedFractionState::expand(const CReal& xi, int j_max) {
  return ContinuedFractionState(xi, j_max);
}

void ContinuedFractionState::extend(int j_max) {
  std::unique_lock<std::shared_mutex> lk(mu_);
  extend_locked(j_max);
}

void ContinuedFractionState::extend_locked(int j_max) {
  if (j_max > kMaxDepth) throw BudgetError("continued-fraction depth exceeds budget");
  while ((int)a_.size() < j_max) {
    int j = (int)a_.size() + 1;
    ZZ aj;
    if (prescribed_) {
      aj = xi_.prescribed_quotient(j);
    } else {
      CReal y = CReal::integer(1) / remainder_;
      try {
        aj = certified_floor(y);
      } catch (const UndecidableError&) {
        throw DomainError("partial quotient a_" + std::to_string(j) +
                          " is undecidable: xi may be rational");
      }
      CReal next = y - CReal::integer(aj);
      int s;
      try {
        s = certified_sign(next);
      } catch (const UndecidableError&) {
        throw DomainError("Gauss-map remainder at step " + std::to_string(j) +
                          " is undecidable: xi may be rational");
      }
      if (s == 0)
        throw DomainError("xi is rational: continued fraction terminates at a_" +
                          std::to_string(j));
      if (s < 0) throw Error("certified floor returned an upper bound");
      remainder_ = next;
    }
    if (aj < 1)
      throw DomainError("partial quotient a_" + std::to_string(j) + " < 1");

    const ZZ& pj1 = p_[j];      // p_{j-1}
    const ZZ& pj2 = p_[j - 1];  // p_{j-2}
    const ZZ& qj1 = q_[j];
    const ZZ& qj2 = q_[j - 1];
    ZZ pj = aj * pj1 + pj2;
    ZZ qj = aj * qj1 + qj2;

    // determinant identity p_j q_{j-1} - p_{j-1} q_j = (-1)^{j+1}
    ZZ det = pj * qj1 - pj1 * qj;
    if (det != ((j % 2 == 1) ? 1 : -1))
      throw Error("convergent determinant identity failed at j = " + std::to_string(j));

    CReal rj = CReal::integer(qj) * xi_ - CReal::integer(pj);
    if (certified_sign(rj) != ((j % 2 == 0) ? 1 : -1))
      throw Error("residual sign alternation failed at j = " + std::to_string(j));
    CReal dj = rj.abs();

    // q_j |q_{j-1} xi - p_{j-1}| < 1 < (q_j + q_{j-1}) |q_{j-1} xi - p_{j-1}|
    const CReal& prev = def_[j - 1];
    if (certified_compare(CReal::integer(qj) * prev, CReal::integer(1)) != Cmp::LT ||
        certified_compare(CReal::integer(qj + qj1) * prev, CReal::integer(1)) != Cmp::GT)
      throw Error("convergent sandwich inequality failed at j = " + std::to_string(j));

    a_.push_back(aj);
    p_.push_back(std::move(pj));
    q_.push_back(std::move(qj));
    resid_.push_back(rj);
    def_.push_back(dj);
    def_d_.push_back(dj.to_double_bounds());
  }
}

int ContinuedFractionState::depth() const {
  std::shared_lock<std::shared_mutex> lk(mu_);
  return (int)a_.size();
}

void ContinuedFractionState::check_range(int j, int lo, int hi, const char* what) const {
  if (j < lo || j > hi)
    throw DomainError(std::string(what) + " index " + std::to_string(j) +
                      " outside [" + std::to_string(lo) + ", " + std::to_string(hi) +
                      "]; extend the state first");
}

ZZ ContinuedFractionState::partial_quotient(int j) const {
  std::shared_lock<std::shared_mutex> lk(mu_);
  check_range(j, 1, (int)a_.size(), "partial quotient");
  return a_[j - 1];
}

Convergent ContinuedFractionState::convergent(int j) const {
  std::shared_lock<std::shared_mutex> lk(mu_);
  check_range(j, 0, (int)a_.size(), "convergent");
  return Convergent{p_[j + 1], q_[j + 1]};
}

CReal ContinuedFractionState::residual(int j) const {
  std::shared_lock<std::shared_mutex> lk(mu_);
  check_range(j, 0, (int)a_.size(), "residual");
  return resid_[j];
}

CReal ContinuedFractionState::defect(int j) const {
  std::shared_lock<std::shared_mutex> lk(mu_);
  check_range(j, 0, (int)a_.size(), "defect");
  return def_[j];
}

CReal ContinuedFractionState::epsilon(int j) const {
  std::shared_lock<std::shared_mutex> lk(mu_);
  check_range(j, 0, (int)a_.size() - 1, "epsilon");
  return def_[j + 1] / def_[j];
}

Convergent ContinuedFractionState::semiconvergent(int j, const ZZ& t) const {
  std::shared_lock<std::shared_mutex> lk(mu_);
  check_range(j, 1, (int)a_.size() - 1, "semiconvergent");
  if (t < 0 || t > a_[j]) throw DomainError("semiconvergent t outside [0, a_{j+1}]");
  return Convergent{t * p_[j + 1] + p_[j], t * q_[j + 1] + q_[j]};
}

CReal ContinuedFractionState::semiconvergent_defect(int j, const QQ& t) const {
  std::shared_lock<std::shared_mutex> lk(mu_);
  check_range(j, 1, (int)a_.size() - 1, "semiconvergent");
  if (t < 0 || t > QQ(a_[j])) throw DomainError("semiconvergent t outside [0, a_{j+1}]");
  QQ qjt = t * QQ(q_[j + 1]) + QQ(q_[j]);
  QQ pjt = t * QQ(p_[j + 1]) + QQ(p_[j]);
  return (CReal::rational(qjt) * xi_ - CReal::rational(pjt)).abs();
}

namespace {

// minimal-family chain member for k = 2: the pair (convergent j,
// semiconvergent (j,t)) with t in {0, ..., a_{j+1}-1}; heights are
// non-decreasing along the chain and defects strictly decrease
struct Pos {
  int j;
  ZZ t;
};

}  // namespace

CReal psi_explicit(ContinuedFractionState& st, int k, PsiVariant variant, const CReal& Q) {
  if (k != 1 && k != 2) throw DomainError("k must be 1 or 2");
  CReal one = CReal::integer(1);

  auto ensure = [&](int j) {
    if (st.depth() < j) st.extend(j);
  };
  ensure(1);

  // double prefilter for "defect * Q > 1"; falls back to a certified compare
  auto [qlo, qhi] = Q.to_double_bounds();
  auto defect_gt = [&](const CReal& d, double dlo, double dhi) {
    if (pad_lo(dlo * qlo) > 1.0) return true;
    if (pad_hi(dhi * qhi) < 1.0) return false;
    return certified_compare(d * Q, one) == Cmp::GT;
  };

  if (variant == PsiVariant::PSI) {
    if (certified_compare(Q, one) == Cmp::LT) throw DomainError("psi requires Q >= 1");
    if (k == 1) {
      // least j with |q_j xi - p_j| <= 1/Q
      int j = 0;
      while (true) {
        ensure(j + 1);
        std::shared_lock<std::shared_mutex> lk(st.mu_);
        auto [dlo, dhi] = st.def_d_[j];
        const CReal& d = st.def_[j];
        if (!defect_gt(d, dlo, dhi)) return CReal::integer(st.q_[j + 1]);
        ++j;
        if (j > kMaxDepth) throw BudgetError("psi chain exceeded depth budget");
      }
    }
    // k = 2: first chain member whose defect eta_{j-1} - t eta_j is <= 1/Q
    Pos pos{0, ZZ(0)};
    while (true) {
      ensure(pos.j + 1);
      std::shared_lock<std::shared_mutex> lk(st.mu_);
      double plo = pos.j == 0 ? 1.0 : st.def_d_[pos.j - 1].first;
      double phi = pos.j == 0 ? 1.0 : st.def_d_[pos.j - 1].second;
      auto [dlo, dhi] = st.def_d_[pos.j];
      double td = pos.t.get_d();
      CReal prev = pos.j == 0 ? one : st.def_[pos.j - 1];
      CReal d = prev - CReal::integer(pos.t) * st.def_[pos.j];
      if (!defect_gt(d, pad_lo(plo - td * dhi), pad_hi(phi - td * dlo))) {
        ZZ h = pos.t == 0 ? st.q_[pos.j + 1] : ZZ(pos.t * st.q_[pos.j + 1] + st.q_[pos.j]);
        return CReal::integer(h);
      }
      if (pos.t + 1 < st.a_[pos.j]) {
        ++pos.t;
      } else {
        ++pos.j;
        pos.t = 0;
        if (pos.j > kMaxDepth) throw BudgetError("psi chain exceeded depth budget");
      }
    }
  }

  // PSI_PRIME: right-continuous in Q with integer breakpoints
  ZZ H = certified_floor(Q);
  if (H < 1) throw DomainError("psi_prime requires Q >= C'_k");
  if (k == 1) {
    // largest j with q_j <= H
    int j = 0;
    while (true) {
      ensure(j + 2);
      std::shared_lock<std::shared_mutex> lk(st.mu_);
      if (st.q_[j + 2] > H) return one / st.def_[j];
      ++j;
      if (j > kMaxDepth) throw BudgetError("psi' chain exceeded depth budget");
    }
  }
  // k = 2: last chain member of height <= H
  Pos pos{0, ZZ(0)};
  while (true) {
    Pos nxt = pos;
    ensure(pos.j + 1);
    {
      std::shared_lock<std::shared_mutex> lk(st.mu_);
      if (pos.t + 1 < st.a_[pos.j]) {
        ++nxt.t;
      } else {
        ++nxt.j;
        nxt.t = 0;
      }
    }
    ensure(nxt.j + 1);
    std::shared_lock<std::shared_mutex> lk(st.mu_);
    ZZ hn = nxt.t == 0 ? st.q_[nxt.j + 1] : ZZ(nxt.t * st.q_[nxt.j + 1] + st.q_[nxt.j]);
    if (hn > H) {
      CReal prev = pos.j == 0 ? one : st.def_[pos.j - 1];
      return one / (prev - CReal::integer(pos.t) * st.def_[pos.j]);
    }
    pos = nxt;
    if (pos.j > kMaxDepth) throw BudgetError("psi' chain exceeded depth budget");
  }
}

}  // namespace dpa
