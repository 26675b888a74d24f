#include "dpa/conditions.hpp"

#include <cmath>
#include <utility>

#include "dpa/error.hpp"

namespace dpa {

namespace {

const CReal kOne = CReal::integer(1);

// a <= b, treating "undecidable at the precision cap" as a tie.  Every use
// below locates a point against breakpoints of a CONTINUOUS function, where
// adjacent pieces agree at the shared endpoint, so a tie is harmless.
bool le_or_tie(const CReal& a, const CReal& b) {
  auto [alo, ahi] = a.to_double_bounds();
  auto [blo, bhi] = b.to_double_bounds();
  if (ahi <= blo) return true;
  if (alo > bhi) return false;
  try {
    return certified_compare(a, b) != Cmp::GT;
  } catch (const UndecidableError&) {
    return true;
  }
}

bool is_rational_one(const CReal& v) { return v.is_rational() && v.as_rational() == 1; }

// slope and intercept of the chord through (x0,y0), (x1,y1)
std::pair<CReal, CReal> chord(const CReal& x0, const CReal& y0, const CReal& x1,
                              const CReal& y1) {
  CReal a = (y1 - y0) / (x1 - x0);
  CReal c = y0 - a * x0;
  return {a, c};
}

// whether the chord intercept is zero (degenerate line through the origin)
bool intercept_is_zero(const CReal& c) {
  auto [lo, hi] = c.to_double_bounds();
  if (lo > 0 || hi < 0) return false;
  try {
    return certified_sign(c) == 0;
  } catch (const UndecidableError&) {
    throw Error("cannot separate an interpolant intercept from zero");
  }
}

// antiderivative of Q^-2 ln(aQ+c)
CReal russmann_antiderivative(const CReal& a, const CReal& c, const CReal& Q) {
  CReal arg = a * Q + c;
  if (intercept_is_zero(c)) return (arg.log() + kOne) / Q * CReal::integer(-1);
  return (a / c) * (Q / arg).log() - arg.log() / Q;
}

// antiderivative of (2aQ+c) / (Q^2 (aQ+c)), the density of dDelta/(Q Delta)
// for Delta = Q(aQ+c)
CReal stieltjes_antiderivative(const CReal& a, const CReal& c, const CReal& Q) {
  if (intercept_is_zero(c)) return CReal::integer(-2) / Q;
  return (a / c) * (Q / (a * Q + c)).log() - kOne / Q;
}

}  // namespace

DeltaFunction::DeltaFunction(PiecewiseConstantFunction psi_d) : psi_(std::move(psi_d)) {
  if (!psi_.left_continuous)
    throw Error("DeltaFunction needs the left-continuous Psi table");
  if (psi_.values.empty()) throw Error("empty Psi table");
  const auto& B = psi_.breakpoints;
  const auto& V = psi_.values;
  x_lo_ = psi_.domain_lo * V[0];
  // leading linear stretch [Delta(1), B_1 V_0]
  CReal cursor = x_lo_;
  for (size_t i = 0; i < B.size(); ++i) {
    CReal gap_lo = B[i] * V[i];
    segs_.push_back({cursor, gap_lo, false, CReal::integer(0), V[i]});
    CReal gap_hi = B[i] * V[i + 1];
    segs_.push_back({gap_lo, gap_hi, true, B[i], CReal::integer(0)});
    cursor = gap_hi;
  }
  x_hi_ = psi_.domain_hi * V.back();
  segs_.push_back({cursor, x_hi_, false, CReal::integer(0), V.back()});
}

CReal DeltaFunction::delta(const CReal& Q) const { return Q * psi_.eval(Q); }

CReal DeltaFunction::delta_star(const CReal& x) const {
  if (!le_or_tie(x_lo_, x)) throw DomainError("delta_star argument below Delta(1)");
  if (!le_or_tie(x, x_hi_))
    throw DomainError("Psi table exhausted: rebuild with a larger q_max");
  for (const auto& s : segs_)
    if (le_or_tie(x, s.hi)) return s.flat ? s.level : x / s.value;
  return psi_.domain_hi;  // x at the very top of the covered range
}

InterpolantPhi build_phi(const PiecewiseConstantFunction& psi_d) {
  if (!psi_d.left_continuous) throw Error("build_phi needs the left-continuous table");
  const auto& B = psi_d.breakpoints;
  const auto& V = psi_d.values;
  const CReal half = CReal::rational(QQ(1, 2));

  InterpolantPhi phi;
  if (B.empty()) {  // constant Psi: Phi is the same constant
    phi.x = {psi_d.domain_lo, psi_d.domain_hi};
    phi.y = {V[0], V[0]};
    return phi;
  }
  CReal prev = psi_d.domain_lo;
  size_t first = 0;
  phi.x.push_back(prev);
  if (le_or_tie(B[0], prev)) {
    // zero-length [1, Q_1] stretch: start directly at the jump value
    phi.y.push_back(V[1]);
    first = 1;
  } else {
    phi.y.push_back(V[0]);
  }
  for (size_t l = first; l < B.size(); ++l) {
    // knot in ]prev, B_l[ ∩ [B_l - 1, B_l[: constant until the knot (the
    // shared value node marks the stretch), then linear up to the jump value
    CReal knot = CReal::max((prev + B[l]) * half, B[l] - kOne);
    phi.x.push_back(knot);
    phi.y.push_back(phi.y.back());
    phi.x.push_back(B[l]);
    phi.y.push_back(V[l + 1]);
    prev = B[l];
  }
  if (phi.x.size() < 2) throw Error("interpolant needs a jump beyond the domain start");
  return phi;
}

CReal InterpolantPhi::eval(const CReal& Q) const {
  if (!le_or_tie(x.front(), Q) || !le_or_tie(Q, x.back()))
    throw DomainError("argument outside the interpolant domain");
  for (size_t i = 0; i + 1 < x.size(); ++i) {
    if (!le_or_tie(Q, x[i + 1])) continue;
    if (y[i].node() == y[i + 1].node()) return y[i];
    return y[i] + (Q - x[i]) / (x[i + 1] - x[i]) * (y[i + 1] - y[i]);
  }
  return y.back();
}

CReal bruno_integral(const DeltaFunction& df, const CReal& upper, BrunoFlavor flavor) {
  CReal total = CReal::integer(0);
  switch (flavor) {
    case BrunoFlavor::CONDITION_A: {
      if (!le_or_tie(df.x_lo_, upper))
        throw DomainError("upper limit below Delta(1)");
      if (!le_or_tie(upper, df.x_hi_))
        throw DomainError("insufficient breakpoint data for the requested upper limit");
      for (const auto& s : df.segs_) {
        if (le_or_tie(upper, s.lo)) break;
        CReal end = CReal::min(s.hi, upper);
        if (s.flat)
          total = total + (end.log() - s.lo.log()) / s.level;
        else
          total = total + s.value * (kOne / s.lo - kOne / end);
      }
      return total;
    }
    case BrunoFlavor::RUSSMANN_PSI: {
      const auto& psi = df.psi();
      if (!le_or_tie(psi.domain_lo, upper))
        throw DomainError("upper limit below the table domain");
      if (!le_or_tie(upper, psi.domain_hi))
        throw DomainError("insufficient breakpoint data for the requested upper limit");
      CReal start = psi.domain_lo;
      for (size_t k = 0; k < psi.values.size(); ++k) {
        CReal stop = k < psi.breakpoints.size() ? psi.breakpoints[k] : psi.domain_hi;
        if (le_or_tie(upper, start)) break;
        CReal end = CReal::min(stop, upper);
        if (!is_rational_one(psi.values[k]))
          total = total + psi.values[k].log() * (kOne / start - kOne / end);
        start = stop;
      }
      return total;
    }
    case BrunoFlavor::RUSSMANN_PHI: {
      InterpolantPhi phi = build_phi(df.psi());
      if (!le_or_tie(phi.x.front(), upper))
        throw DomainError("upper limit below the interpolant domain");
      if (!le_or_tie(upper, phi.domain_hi()))
        throw DomainError("insufficient breakpoint data for the requested upper limit");
      for (size_t i = 0; i + 1 < phi.x.size(); ++i) {
        if (le_or_tie(upper, phi.x[i])) break;
        CReal end = CReal::min(phi.x[i + 1], upper);
        if (phi.y[i].node() == phi.y[i + 1].node()) {
          if (!is_rational_one(phi.y[i]))
            total = total + phi.y[i].log() * (kOne / phi.x[i] - kOne / end);
        } else {
          auto [a, c] = chord(phi.x[i], phi.y[i], phi.x[i + 1], phi.y[i + 1]);
          total = total + russmann_antiderivative(a, c, end) -
                  russmann_antiderivative(a, c, phi.x[i]);
        }
      }
      return total;
    }
  }
  throw Error("unknown integral flavor");
}

CReal phi_stieltjes_integral(const InterpolantPhi& phi, const CReal& t, const CReal& T) {
  if (!le_or_tie(phi.x.front(), t) || !le_or_tie(T, phi.domain_hi()) || !le_or_tie(t, T))
    throw DomainError("Stieltjes limits outside the interpolant domain");
  CReal total = CReal::integer(0);
  for (size_t i = 0; i + 1 < phi.x.size(); ++i) {
    if (le_or_tie(phi.x[i + 1], t)) continue;
    if (le_or_tie(T, phi.x[i])) break;
    CReal start = CReal::max(phi.x[i], t);
    CReal end = CReal::min(phi.x[i + 1], T);
    if (phi.y[i].node() == phi.y[i + 1].node()) {
      total = total + (kOne / start - kOne / end);
    } else {
      auto [a, c] = chord(phi.x[i], phi.y[i], phi.x[i + 1], phi.y[i + 1]);
      total = total + stieltjes_antiderivative(a, c, end) -
              stieltjes_antiderivative(a, c, start);
    }
  }
  return total;
}

DiophantineEvidence diophantine_check(const PiecewiseConstantFunction& psi_d, double tau) {
  DiophantineEvidence ev;
  ev.tau = tau;
  ev.fitted_c = psi_d.values[0];  // sup at Q = 1 on the leading piece
  const CReal tau_r = CReal::from_double(tau);
  double run = psi_d.values[0].to_double();
  for (size_t k = 0; k + 1 < psi_d.values.size(); ++k) {
    const CReal& B = psi_d.breakpoints[k];
    const CReal& V = psi_d.values[k + 1];
    CReal term = V / (tau_r * B.log()).exp();
    ev.fitted_c = CReal::max(ev.fitted_c, term);
    double bq = B.to_double();
    double r = V.to_double() / std::pow(bq, tau);
    ev.breakpoint_q.push_back(bq);
    ev.ratio.push_back(r);
    run = std::max(run, r);
    ev.running_c.push_back(run);
  }
  size_t m = ev.running_c.size();
  if (m >= 2) ev.growing = ev.running_c[m - 1] > ev.running_c[0] * 1.5;
  return ev;
}

}  // namespace dpa
