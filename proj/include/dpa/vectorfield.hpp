#pragma once
#include <complex>
#include <map>
#include <vector>

#include "dpa/certified.hpp"

namespace dpa {

using ModeKey = std::vector<long>;                 // Fourier index k
using ModeCoeff = std::vector<std::complex<double>>;  // component vector P_k

// Truncated Fourier series of an analytic vector field on the complex
// torus strip of half-width `width`.  Coefficients are stored in a sorted
// map, so every operation iterates modes in a fixed order.  `tail_bound`
// accumulates the majorant mass of modes discarded by truncating
// operations (always at the field's own width) and only ever grows.
class AnalyticVectorField {
 public:
  AnalyticVectorField(int dim, double width, int mode_cap = 32);

  static AnalyticVectorField constant(const std::vector<double>& c, double width,
                                      int mode_cap = 32);

  int dim() const { return n_; }
  double width() const { return width_; }
  int mode_cap() const { return mode_cap_; }
  double tail_bound() const { return tail_bound_; }
  const std::map<ModeKey, ModeCoeff>& modes() const { return modes_; }

  // drops the mode when every component is exactly zero
  void set_mode(const ModeKey& k, const ModeCoeff& c);
  const ModeCoeff* mode(const ModeKey& k) const;
  // amp cos(2 pi k.theta) e_comp / amp sin(2 pi k.theta) e_comp, keeping
  // the conjugate-pair symmetry exact
  void add_cos(const ModeKey& k, int comp, double amp);
  void add_sin(const ModeKey& k, int comp, double amp);

  // P_{-k} = conj(P_k) for every stored mode
  bool real_valued() const;
  // largest |k|_1 among stored modes
  long top_degree() const;

  void add_tail(double t) { tail_bound_ += t; }

  // value at a real point (requires real_valued)
  std::vector<double> eval_real(const std::vector<double>& theta) const;
  // value at theta + i * im * (1,..,1)
  ModeCoeff eval_shifted(const std::vector<double>& theta, double im) const;

  AnalyticVectorField operator+(const AnalyticVectorField& o) const;
  AnalyticVectorField operator-(const AnalyticVectorField& o) const;
  AnalyticVectorField scaled(double c) const;

 private:
  int n_;
  double width_;
  int mode_cap_;
  double tail_bound_ = 0;
  std::map<ModeKey, ModeCoeff> modes_;
};

// majorant norm sum_k |P_k|_inf e^{2 pi s' |k|_1}: an exact expression over
// the stored coefficients, and an upper bound for the sup norm on the
// strip of half-width s'.  Requires s' <= width.
CReal majorant_norm(const AnalyticVectorField& P, double s_prime);
// grid-sampled lower estimate of the sup norm (64^n real points, imaginary
// parts 0 and +-s' on the diagonal)
double grid_sup_estimate(const AnalyticVectorField& P, double s_prime);

// modes with k . (T omega) = 0, an exact integer test; the flow average
// along the period-T orbit of omega = t_omega / T
AnalyticVectorField periodic_average(const AnalyticVectorField& P,
                                     const std::vector<ZZ>& t_omega);

// V with [V, X_omega] = P - [P]:  V_k = T P_k / (2 pi i k . t_omega) off
// the resonant module, V_k = 0 on it; the bracket identity is re-verified
// coefficient-wise on exit
AnalyticVectorField homological_solve(const AnalyticVectorField& P,
                                      const std::vector<ZZ>& t_omega, double T);

// (DV)X - (DX)V by convolution; modes beyond the inherited cap are
// discarded into tail_bound; the Cauchy estimate at half the width,
// N_{s/2} <= 2 (s/2)^-1 N_s(X) N_s(V), is asserted on every call
AnalyticVectorField lie_bracket(const AnalyticVectorField& X, const AnalyticVectorField& V);

// Lie-series pullback (V^t)* X truncated at max_order, with the geometric
// tail bound N(X) sum_{m># } (|t|/2)^m added to tail_bound.  Requires
// |t| <= 1 and N_s(V) <= (4e)^-1 (s - target_width).
AnalyticVectorField pullback(const AnalyticVectorField& V, double t,
                             const AnalyticVectorField& X, double target_width,
                             int max_order = 20);

// time-t flow of theta' = V(theta) from a real point, adaptive step
// doubling to tolerance 1e-12; requires |t| < (width margin)/N(V)
std::vector<double> flow_eval(const AnalyticVectorField& V, double t,
                              std::vector<double> theta);

// flow together with its derivative in the start point, from the
// variational equation J' = DV(theta(t)) J
struct FlowJet {
  std::vector<double> point;
  std::vector<std::vector<double>> jacobian;  // row i, column j = d point_i / d theta_j
};
FlowJet flow_jet(const AnalyticVectorField& V, double t, const std::vector<double>& theta);

// composition of time-t_i flows: Phi = V_1{t_1} o ... o V_k{t_k}, the last
// appended stage acting first.  Each append consumes a width margin and
// checks the flow-existence condition |t| N(V) < margin.
class EmbeddingMap {
 public:
  EmbeddingMap() = default;  // zero-dimensional placeholder
  EmbeddingMap(int dim, double codomain_width);

  int dim() const { return n_; }
  int stages() const { return static_cast<int>(stages_.size()); }
  double domain_width() const { return domain_; }
  double codomain_width() const { return codomain_; }
  const CReal& displacement_bound() const { return displacement_; }
  const AnalyticVectorField& generator(int i) const { return stages_[i].V; }
  double stage_time(int i) const { return stages_[i].t; }

  void append_stage(const AnalyticVectorField& V, double t, double margin);
  void extend(const EmbeddingMap& tail);  // append all of tail's stages

  std::vector<double> eval(const std::vector<double>& theta) const;
  FlowJet eval_jet(const std::vector<double>& theta) const;

 private:
  struct Stage {
    AnalyticVectorField V;
    double t, margin;
  };
  int n_ = 0;
  double domain_ = 0, codomain_ = 0;
  CReal displacement_ = CReal::integer(0);
  std::vector<Stage> stages_;
};

// one periodic averaging step for Y = X_omega + X_varpi + S + P on the
// strip of width s: output on width s - sigma
struct AveragingInput {
  std::vector<ZZ> t_omega;    // T omega, an integer vector
  double T = 1;               // period
  std::vector<double> varpi;  // constant frequency shift
  AnalyticVectorField S, P;
};
struct AveragingResult {
  AnalyticVectorField V, average, remainder;
  double epsilon, delta, mu;  // majorant sizes used in the threshold
};
// threshold: with mu = max(|varpi|, 2 eps, eps + delta),
// 2^4 T mu / sigma <= b must hold; the conclusion bounds
// |V^1 - Id| <= T eps and N_{s-sigma}(remainder) <= b eps are re-checked
AveragingResult averaging_step(const AveragingInput& Y, double s, double sigma, double b);

}  // namespace dpa
