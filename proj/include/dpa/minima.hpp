#pragma once
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "dpa/frequency.hpp"
#include "dpa/lattice.hpp"

namespace dpa {

// C(Q,K)  = {x in F : |x| <= K, |x_0 alpha - alpha_0 x| <= 1/Q}   (PRIMAL)
// C'(Q,K) = {x in F : |x| <= Q, |x . alpha| <= 1/K}               (DUAL_PROBLEM)
enum class BodyKind { PRIMAL, DUAL_PROBLEM };
struct ConvexBodySpec {
  BodyKind kind;
  CReal Q, K;
  FrequencyVector frequency;
};

// Non-decreasing step function.  LEFT-continuous (Psi): values[0] on
// [lo, B_1], values[i] on ]B_i, B_{i+1}].  RIGHT-continuous (Psi'):
// values[0] on [lo, B_1[, values[i] on [B_i, B_{i+1}[.
struct PiecewiseConstantFunction {
  bool left_continuous = true;
  CReal domain_lo, domain_hi;
  std::vector<CReal> breakpoints;  // strictly increasing
  std::vector<CReal> values;       // breakpoints.size() + 1 entries

  CReal eval(const CReal& x) const;
};

struct PsiResult {
  ZZ value;                                // Psi_k(Q), a positive integer
  CReal defect;                            // max defect among the witnesses
  std::vector<std::vector<ZZ>> witnesses;  // k independent vectors
};

struct PsiPrimeResult {
  CReal value;   // Psi'_k(Q) = 1/defect
  CReal defect;  // min over k-families of max |x.alpha|
  ZZ height;     // largest witness height (the active breakpoint)
  std::vector<std::vector<ZZ>> witnesses;
};

struct LambdaResult {
  CReal value;
  std::vector<std::vector<ZZ>> vectors;  // attainment chain, one per minimum
};

enum class FamilyMode { ETA, ETA_PRIME };

struct MinimalFamily {
  std::vector<std::vector<ZZ>> vectors;
  ZZ height;     // |e| = max height over members
  CReal defect;  // eta or eta' of the family
};

struct DualityReport {
  int k = 0;
  ZZ psi_value;
  CReal psi_prime_at_c2q, psi_prime_at_c4q;
  CReal lhs, rhs;  // c1 Psi'_{d+1-k}(c2 Q), c3 Psi'_{d+1-k}(c4 Q)
  bool lhs_ok = false, rhs_ok = false;
  double ratio_lhs = 0, ratio_rhs = 0;  // Psi/lhs and rhs/Psi
  CReal q0;
};

class FamilyScanner;

// Enumeration engines for one (alpha, Lambda) pair.  Incremental scanners
// (one per k and defect mode) are cached so ascending-Q sweeps pay the
// enumeration cost once.  Queries are safe to issue concurrently.
class MinimaEngine {
 public:
  MinimaEngine(FrequencyVector fv, LatticeBasis L);
  ~MinimaEngine();

  const FrequencyVector& frequency() const { return fv_; }
  const LatticeBasis& lattice() const { return L_; }

  // direct per-query enumeration, pruned by per-coordinate defect windows
  PsiResult psi(int k, const CReal& Q, long budget = 100000) const;
  // incremental greedy scanner over heights
  PsiPrimeResult psi_prime(int k, const CReal& Q, long budget = 100000) const;
  ZZ c_prime(int k, long budget = 100000) const;
  std::vector<MinimalFamily> minimal_families(int k, const ZZ& x_max, FamilyMode mode,
                                              long budget = 100000) const;
  // independent reconstruction of Psi_k from the ETA minimal families
  PsiResult psi_from_families(int k, const CReal& Q, long budget = 100000) const;

  PiecewiseConstantFunction psi_prime_function(int k, const ZZ& x_max,
                                               long budget = 100000) const;
  // Psi_k on [1, q_max] from ETA families (breakpoints 1/eta_l)
  PiecewiseConstantFunction psi_function(int k, const CReal& q_max,
                                         long budget = 100000) const;

  // body built from this engine's frequency vector
  LambdaResult successive_minimum(BodyKind kind, const CReal& Q, const CReal& K, int k,
                                  long budget = 100000) const;

  DualityReport duality_check(int k, const CReal& Q, long budget = 100000) const;

  // sign-normalized Lambda points with s < |x|_inf <= t (coordinate-box scan)
  void box_points(const ZZ& s, const ZZ& t,
                  const std::function<void(const std::vector<ZZ>&, const ZZ&)>& f) const;

 private:
  FrequencyVector fv_;
  LatticeBasis L_;
  bool is_standard_ = false;  // Lambda = Z^n
  std::vector<QQ> coord_bound_;  // |c_i| <= bound_i * |x|_inf (pseudo-inverse)
  mutable std::mutex mu_;
  mutable std::map<std::pair<int, int>, std::unique_ptr<FamilyScanner>> scanners_;

  FamilyScanner& scanner(int k, FamilyMode mode) const;
  friend class FamilyScanner;
};

// lambda_k for the body described by `body` against the lattice L
LambdaResult successive_minimum(const ConvexBodySpec& body, const LatticeBasis& L, int k,
                                long budget = 100000);

// k-th successive minimum for an arbitrary gauge; outer_radius r must
// satisfy C ⊆ r·B_inf, i.e. gauge(x) >= |x|_inf / r, which bounds the
// shell search.  Used by the body minima and the polytope duality tests.
LambdaResult lambda_k_gauge(const std::function<CReal(const std::vector<ZZ>&)>& gauge,
                            const CReal& outer_radius, const LatticeBasis& L, int k,
                            long budget = 100000);

// defect functionals
CReal eta_defect(const FrequencyVector& fv, const std::vector<ZZ>& x);        // max_j |x0 a_j - a0 x_j|
CReal eta_prime_defect(const FrequencyVector& fv, const std::vector<ZZ>& x);  // |x . alpha|

}  // namespace dpa
