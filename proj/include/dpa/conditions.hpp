#pragma once
#include <vector>

#include "dpa/minima.hpp"

namespace dpa {

enum class BrunoFlavor { CONDITION_A, RUSSMANN_PSI, RUSSMANN_PHI };

// Delta(Q) = Q Psi_d(Q) built from a left-continuous Psi table on
// [1, q_max]: increasing, left-continuous, piecewise linear with upward
// jumps at the Psi breakpoints.  The generalized inverse
// Delta*(x) = sup{Q >= 1 : Delta(Q) <= x} is continuous and non-decreasing:
// across the jump gap [B V_prev, B V_next] it is flat at level B, between
// gaps it is linear with slope 1/V.
class DeltaFunction {
 public:
  explicit DeltaFunction(PiecewiseConstantFunction psi_d);

  const PiecewiseConstantFunction& psi() const { return psi_; }
  CReal delta(const CReal& Q) const;       // Q Psi(Q)
  CReal delta_star(const CReal& x) const;  // sup{Q >= 1 : Delta(Q) <= x}
  const CReal& x_lo() const { return x_lo_; }  // Delta(1)
  const CReal& x_hi() const { return x_hi_; }  // Delta(q_max): coverage limit

 private:
  struct Segment {
    CReal lo, hi;  // x-range
    bool flat;     // flat: Delta* = level; else Delta* = x / value
    CReal level;   // jump point B (flat segments)
    CReal value;   // Psi value V (linear segments)
  };
  PiecewiseConstantFunction psi_;
  std::vector<Segment> segs_;
  CReal x_lo_, x_hi_;

  friend CReal bruno_integral(const DeltaFunction&, const CReal&, BrunoFlavor);
};

// Continuous piecewise-linear interpolant with
// Psi(Q) <= Phi(Q) <= Psi(Q+1): constant on [Q_l, b_l], linear on
// [b_l, Q_{l+1}] where the knot b_l = max(midpoint, Q_{l+1} - 1) sits in
// ]Q_l, Q_{l+1}[ ∩ [Q_{l+1} - 1, Q_{l+1}[.  Constant stretches reuse the
// same value node, so y[i].node() == y[i+1].node() identifies them.
struct InterpolantPhi {
  std::vector<CReal> x;  // strictly increasing, x.front() = 1
  std::vector<CReal> y;  // values at the nodes

  CReal eval(const CReal& Q) const;
  const CReal& domain_hi() const { return x.back(); }
};

InterpolantPhi build_phi(const PiecewiseConstantFunction& psi_d);

// Truncated integrals, evaluated exactly piece by piece:
//   CONDITION_A : int from Delta(1) to upper of dx / (x Delta*(x))
//   RUSSMANN_PSI: int from 1 to upper of Q^-2 ln Psi_d(Q) dQ
//   RUSSMANN_PHI: int from 1 to upper of Q^-2 ln Phi(Q) dQ
CReal bruno_integral(const DeltaFunction& df, const CReal& upper, BrunoFlavor flavor);

// Stieltjes integral int_t^T of dDelta_Phi / (Q Delta_Phi) with
// Delta_Phi(Q) = Q Phi(Q); closed-form per piece.  Together with
// bruno_integral(RUSSMANN_PHI) it exercises the integration-by-parts
// identity behind the condition-(A) <-> Bruno-Russmann equivalence.
CReal phi_stieltjes_integral(const InterpolantPhi& phi, const CReal& t, const CReal& T);

// Least C with Psi_d(Q) <= C Q^tau over the table's range, plus the prefix
// trajectory.  Membership in the Diophantine class is asymptotic, so this
// reports evidence only, never a verdict.
struct DiophantineEvidence {
  double tau = 0;
  CReal fitted_c;                    // sup over the range, exact expression
  std::vector<double> breakpoint_q;  // jump points (double views)
  std::vector<double> ratio;         // V / B^tau at each jump
  std::vector<double> running_c;     // prefix maxima of the ratios
  bool growing = false;              // prefix C climbed well past its first jump
};
DiophantineEvidence diophantine_check(const PiecewiseConstantFunction& psi_d, double tau);

}  // namespace dpa
