#pragma once
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dpa/approx.hpp"
#include "dpa/conditions.hpp"
#include "dpa/frequency.hpp"
#include "dpa/minima.hpp"
#include "dpa/vectorfield.hpp"

namespace dpa {

// Shared arithmetic state for the averaging engines: the frequency, its
// lattice, Psi lookups, periodic bases, and a Delta/Delta* table grown on
// demand.  One context is single-threaded; independent runs get their own.
class AlphaContext {
 public:
  explicit AlphaContext(const FrequencyVector& fv, long budget = 200000);

  const FrequencyVector& fv() const { return fv_; }
  const MinimaEngine& engine() const { return *eng_; }
  int d() const { return fv_.d; }

  ZZ psi_at(const CReal& Q);  // Psi_alpha(Q), the d-th function on Lambda_alpha
  std::vector<PeriodicApproximation> basis(const CReal& Q);
  // Delta/Delta* table whose x-coverage Delta(q_max) reaches x
  const DeltaFunction& delta_table(const CReal& x);
  // table whose Q-domain reaches q (for evaluating Delta at a given Q)
  const DeltaFunction& delta_table_for_q(const CReal& q);
  const DeltaFunction& delta_table() const;  // current table, must exist

  CReal kappa() const;    // 2^6 d^2 (2^d - 1) |alpha|^{-1}
  CReal c_const() const;  // 2^5 d^2 (2^d - 1) |alpha|^{-1} = kappa / 2

 private:
  void rebuild(long q_max);

  FrequencyVector fv_;
  long budget_;
  std::unique_ptr<MinimaEngine> eng_;
  std::optional<DeltaFunction> delta_;
  long q_max_ = 0;
  // repeated stages reuse one Q; key on the expression node identity
  const void* psi_key_ = nullptr;
  ZZ psi_cache_;
  const void* basis_key_ = nullptr;
  std::vector<PeriodicApproximation> basis_cache_;
};

struct StageRecord {
  int index = 0;
  double Q = 0;           // stage approximation parameter
  double eps_bound = 0;   // scheduled bound for this stage's perturbation
  double sigma = 0;       // width consumed
  double width_after = 0;
  double measured_p = 0;          // majorant (+ tail) of the incoming perturbation
  double measured_remainder = 0;  // majorant (+ tail) of the outgoing remainder
};

struct BoundCheck {
  std::string name;
  double measured = 0, bound = 0;
  bool ok = false;
};

struct NormalFormReport {
  std::string alpha_text, perturbation_id;
  double s = 0, eps = 0;
  std::vector<StageRecord> schedule;
  std::vector<BoundCheck> bounds;
  EmbeddingMap phi;
  AnalyticVectorField normal, remainder;  // N and R, or X_beta and final P_m
  std::vector<double> beta;               // KAM counter-term; empty otherwise
  double defect = 0;       // grid max of the conjugacy residual
  double defect_budget = 0;  // accumulated tails + integration tolerances
  int defect_grid = 0;
};

// One multi-phase averaging pass (d sequential periodic averages along a
// Q-approximating basis of Lambda_alpha).
struct QuasiPeriodicResult {
  EmbeddingMap phi;
  AnalyticVectorField average, remainder;  // Pbar at width s, P+ at width s - sigma
  std::vector<PeriodicApproximation> basis;
  double epsilon, delta;  // measured input sizes
};
QuasiPeriodicResult quasi_periodic_step(AlphaContext& ctx, const AnalyticVectorField& S,
                                        const AnalyticVectorField& P, double s,
                                        const CReal& Q, double sigma, double c);

// Finite normal form: m averaging passes with eps_i = 2^-i eps,
// sigma_i = s/(2m), c = 1/2, where Q = Delta*((2 eps)^-1) and
// m = floor(kappa^-1 s Q).
NormalFormReport partial_normal_form(AlphaContext& ctx, const AnalyticVectorField& P, double s,
                                     double eps, const std::string& label = "",
                                     int defect_grid = 24);

// Corollary thresholds for a Psi(Q) <= C Q^tau frequency: the admissible
// eps range and the specialized exponential remainder bound.
struct NekhoroshevThresholds {
  double tau, c_alpha, q_alpha, s;
  double e_alpha;     // max(1, d |alpha|^-1, Q_alpha)
  double kappa;       // 2^6 d^2 (2^d - 1) |alpha|^-1
  double eps_small;   // (2 C_alpha)^-1 E_alpha^-(tau+1)
  double eps_width;   // (2 C_alpha)^-1 (kappa / s)^-(tau+1)
  double remainder_bound(double eps) const;  // 2 eps exp(-ln2 kappa^-1 s (2 C_alpha eps)^(-1/(1+tau)))
};
NekhoroshevThresholds nekhoroshev_thresholds(const FrequencyVector& fv, double tau,
                                             double c_alpha, double q_alpha, double s);

// One KAM stage (d = n): extract the mean X_eta, average the rest away.
struct KamStepResult {
  std::vector<double> eta;  // Pbar = X_eta; the frequency map is x -> x - eta
  EmbeddingMap phi;
  AnalyticVectorField remainder;
  double epsilon;
};
KamStepResult kam_step(AlphaContext& ctx, const AnalyticVectorField& P, double s,
                       const CReal& Q, double sigma);

// Infinite iteration driven to a tolerance: Q_m = Delta*(2^m Delta(Q)),
// sigma_m = C Q_m^-1, beta = -sum eta_m.
NormalFormReport kam_iterate(AlphaContext& ctx, const AnalyticVectorField& P, double s,
                             double eps, double tol, const std::string& label = "",
                             int defect_grid = 64);

}  // namespace dpa
