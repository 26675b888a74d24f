#pragma once
#include <vector>

#include "dpa/minima.hpp"

namespace dpa {

// One periodic approximation of alpha: omega is T-periodic (T omega is the
// integer vector below), its component ratios are exact rationals, and the
// defect obeys the bounds checked by periodic_basis.  All vectors use the
// frequency's canonical coordinate order (largest component first).
struct PeriodicApproximation {
  std::vector<QQ> ratios;          // x_i / x_0, exact projective data
  std::vector<CReal> omega;        // omega_i = alpha_0 * ratios_i
  CReal period;                    // T = x_0 / alpha_0 > 0
  std::vector<ZZ> lattice_vector;  // x = T omega, member of Lambda
  CReal defect;                    // |alpha - omega|_inf
  CReal Q;
};

// d periodic vectors whose scaled copies T_j omega_j form a Z-basis of
// Lambda = Z^n ∩ F, each with certified bounds
//   |alpha - omega_j| <= d (|alpha| T_j Q)^-1,
//   |alpha|^-1 <= T_j <= |alpha|^-1 d Psi_d(Q).
// Requires Q > max(1, d |alpha|^-1).  Construction: the Psi_d(Q) witnesses
// lie in C(Q, Psi_d(Q)); the saturation chain turns them into a Z-basis of
// Lambda inside C(Q/d, d Psi_d(Q)), whose membership is re-verified.
std::vector<PeriodicApproximation> periodic_basis(const MinimaEngine& eng, const CReal& Q,
                                                  long budget = 100000);
// convenience: builds Lambda = Z^n ∩ F and a fresh engine from the frequency
std::vector<PeriodicApproximation> periodic_basis(const FrequencyVector& fv, const CReal& Q,
                                                  long budget = 100000);

// |T alpha - T omega| <= d (|alpha| Q)^-1, recomputed from the stored omega
bool q_approximation_check(const FrequencyVector& fv, const PeriodicApproximation& a);

}  // namespace dpa
