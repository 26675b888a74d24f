#pragma once
#include <deque>
#include <shared_mutex>

#include "dpa/certified.hpp"

namespace dpa {

struct Convergent {
  ZZ p, q;
};

enum class PsiVariant { PSI, PSI_PRIME };

// Continued-fraction expansion of an irrational xi in (0,1): partial
// quotients a_1, a_2, ..., convergents p_j/q_j (p_0 = 0, q_0 = 1), signed
// residuals q_j xi - p_j and the ratios eps_j defined by
// eps_j |q_j xi - p_j| = |q_{j+1} xi - p_{j+1}|.
//
// The table is append-only: concurrent readers are allowed while a single
// thread extends it.  Every extension step verifies the determinant
// identity, the residual sign alternation and the sandwich
// q_{j+1} < |q_j xi - p_j|^{-1} < q_{j+1} + q_j before committing.
class ContinuedFractionState {
 public:
  // quotients via the Gauss map with certified floors (or read off directly
  // when xi was built from prescribed quotients); detects rational xi
  static ContinuedFractionState expand(const CReal& xi, int j_max);

  ContinuedFractionState(const ContinuedFractionState&) = delete;
  ContinuedFractionState& operator=(const ContinuedFractionState&) = delete;

  void extend(int j_max);
  int depth() const;  // largest j with a_j computed

  CReal xi() const { return xi_; }
  ZZ partial_quotient(int j) const;    // a_j, 1 <= j <= depth()
  Convergent convergent(int j) const;  // 0 <= j <= depth()
  CReal residual(int j) const;         // q_j xi - p_j, sign (-1)^j
  CReal defect(int j) const;           // |q_j xi - p_j|
  CReal epsilon(int j) const;          // eps_j in (0,1), 0 <= j < depth()

  // q_{j,t} = t q_j + q_{j-1}, p_{j,t} = t p_j + p_{j-1};
  // 1 <= j < depth(), 0 <= t <= a_{j+1}
  Convergent semiconvergent(int j, const ZZ& t) const;
  // |q_{j,t} xi - p_{j,t}| with the same formulas for fractional t
  CReal semiconvergent_defect(int j, const QQ& t) const;

 private:
  ContinuedFractionState(const CReal& xi, int j_max);
  void extend_locked(int j_max);
  void check_range(int j, int lo, int hi, const char* what) const;

  CReal xi_;
  CReal remainder_;  // current Gauss-map iterate, in (0,1)
  bool prescribed_ = false;
  std::deque<ZZ> a_;               // a_[j-1] = a_j
  std::deque<ZZ> p_, q_;           // index j+1 holds p_j, q_j (j >= -1)
  std::deque<CReal> resid_, def_;  // index j holds r_j, |r_j| (j >= 0)
  std::deque<std::pair<double, double>> def_d_;  // outward double bounds
  mutable std::shared_mutex mu_;

  friend CReal psi_explicit(ContinuedFractionState&, int, PsiVariant, const CReal&);
};

// Closed-form Psi_k / Psi'_k for n = 2, alpha = (1, xi), k in {1, 2}:
// Psi_1(Q) = q_j on ]|q_{j-1} xi - p_{j-1}|^{-1}, |q_j xi - p_j|^{-1}],
// Psi'_1(Q) = |q_j xi - p_j|^{-1} on [q_j, q_{j+1}[, and the semiconvergent
// analogues for k = 2.  The state is extended on demand.  Psi values are
// the exact integer heights; Psi' values are exact inverse defects.
CReal psi_explicit(ContinuedFractionState& st, int k, PsiVariant variant, const CReal& Q);

}  // namespace dpa
