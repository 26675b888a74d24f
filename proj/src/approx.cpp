#include "dpa/approx.hpp"

#include <cstdlib>
#include <utility>

#include "dpa/error.hpp"
#include "dpa/lattice.hpp"

namespace dpa {

namespace {

// |v|_inf over ZZ
ZZ sup_norm(const std::vector<ZZ>& v) {
  ZZ m = 0;
  for (const ZZ& c : v) {
    ZZ a = abs(c);
    if (a > m) m = a;
  }
  return m;
}

}  // namespace

std::vector<PeriodicApproximation> periodic_basis(const MinimaEngine& eng, const CReal& Q,
                                                  long budget) {
  const FrequencyVector& fv = eng.frequency();
  const int n = fv.n;
  const int d = fv.d;
  const CReal dR = CReal::integer(d);

  CReal threshold = CReal::max(CReal::integer(1), dR / fv.norm_inf);
  if (!certified_lt(threshold, Q))
    throw DomainError("periodic_basis requires Q > max(1, d/|alpha|)");

  PsiResult psi = eng.psi(d, Q, budget);
  SaturateResult sat = saturate_chain(psi.witnesses, eng.lattice());
  if (static_cast<int>(sat.b.size()) != d)
    throw Error("internal: saturation chain has wrong length");

  // The chain lives in C(Q/d, d Psi_d(Q)): heights are exact integers,
  // defects eta(b_j) = |b_{j,0} alpha - alpha_0 b_j|_inf certified.
  const ZZ height_cap = ZZ(d) * psi.value;
  const CReal defect_cap = dR / Q;
  for (const auto& b : sat.b) {
    if (sup_norm(b) > height_cap)
      throw Error("internal: saturated vector escapes the height bound d Psi_d(Q)");
    CReal eta = CReal::integer(0);
    for (int i = 1; i < n; ++i)
      eta = CReal::max(eta, (CReal::integer(b[0]) * fv.alpha[i] -
                             fv.alpha[0] * CReal::integer(b[i]))
                                .abs());
    if (!certified_le(eta, defect_cap))
      throw Error("internal: saturated vector escapes the defect bound d/Q");
  }

  // Z-basis certificate: Lambda-coordinates are integral with determinant +-1
  std::vector<std::vector<ZZ>> coord(d, std::vector<ZZ>(d));
  for (int j = 0; j < d; ++j) {
    std::vector<QQ> x(n);
    for (int i = 0; i < n; ++i) x[i] = QQ(sat.b[j][i]);
    auto c = span_coords(eng.lattice(), x);
    if (!c) throw Error("internal: saturated vector left the lattice span");
    for (int i = 0; i < d; ++i) {
      QQ ci = (*c)[i];
      ci.canonicalize();
      if (ci.get_den() != 1)
        throw Error("internal: saturated vector is not a lattice member");
      coord[j][i] = ci.get_num();
    }
  }
  ZZ det = det_bareiss(coord);
  if (det != 1 && det != -1)
    throw Error("internal: saturation chain is not a Z-basis of the lattice");

  const int sign_a0 = certified_sign(fv.alpha[0]);

  std::vector<PeriodicApproximation> out;
  out.reserve(d);
  for (int j = 0; j < d; ++j) {
    std::vector<ZZ> x = sat.b[j];
    if (x[0] == 0)
      throw Error("internal: basis vector with vanishing first coordinate");
    // orient so that T = x_0 / alpha_0 is positive
    const int sign_x0 = sgn(x[0]);
    if (sign_x0 != sign_a0)
      for (ZZ& c : x) c = -c;

    PeriodicApproximation a;
    a.Q = Q;
    a.lattice_vector = x;
    a.ratios.resize(n);
    a.omega.resize(n);
    for (int i = 0; i < n; ++i) {
      QQ r(x[i], x[0]);
      r.canonicalize();
      a.ratios[i] = r;
      a.omega[i] = fv.alpha[0] * CReal::rational(r);
    }
    a.period = CReal::integer(x[0]) / fv.alpha[0];

    a.defect = CReal::integer(0);
    for (int i = 0; i < n; ++i)
      a.defect = CReal::max(a.defect, (fv.alpha[i] - a.omega[i]).abs());

    // |alpha - omega| <= d (|alpha| T Q)^-1 with |alpha| T = |x_0| exact
    const ZZ x0_abs = abs(x[0]);
    if (!certified_le(a.defect, dR / (CReal::integer(x0_abs) * Q)))
      throw Error("internal: approximation escapes the defect bound");
    // |alpha|^-1 <= T <= |alpha|^-1 d Psi_d(Q)  <=>  1 <= |x_0| <= d Psi_d(Q)
    if (x0_abs < 1 || x0_abs > height_cap)
      throw Error("internal: period escapes [1/|alpha|, d Psi_d(Q)/|alpha|]");

    out.push_back(std::move(a));
  }
  return out;
}

std::vector<PeriodicApproximation> periodic_basis(const FrequencyVector& fv, const CReal& Q,
                                                  long budget) {
  LatticeBasis L =
      fv.full_space ? full_lattice(fv.n) : intersect_lattice(fv.subspace_gens);
  MinimaEngine eng(fv, std::move(L));
  return periodic_basis(eng, Q, budget);
}

bool q_approximation_check(const FrequencyVector& fv, const PeriodicApproximation& a) {
  // recompute |alpha - omega| from the stored omega so corruption is caught
  CReal dev = CReal::integer(0);
  for (int i = 0; i < fv.n; ++i)
    dev = CReal::max(dev, (fv.alpha[i] - a.omega[i]).abs());
  CReal lhs = a.period * dev;
  CReal rhs = CReal::integer(fv.d) / (fv.norm_inf * a.Q);
  return not_provably_greater(lhs, rhs);
}

}  // namespace dpa
