#include "dpa/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dpa/approx.hpp"
#include "dpa/conditions.hpp"
#include "dpa/contfrac.hpp"
#include "dpa/error.hpp"
#include "dpa/normalform.hpp"
#include "dpa/polytope.hpp"

namespace dpa {
namespace {

struct Checker {
  long total = 0;
  long failed = 0;
  std::vector<std::string> messages;

  void check(bool ok, const std::string& what) {
    ++total;
    if (ok) return;
    ++failed;
    if (messages.size() < 8) messages.push_back(what);
  }
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

QQ frac(long n, long d) {
  QQ r(n, d);
  r.canonicalize();
  return r;
}

double ub(const CReal& x) { return x.to_double_bounds().second; }

bool eq(const CReal& a, const CReal& b) { return certified_compare(a, b) == Cmp::EQ; }

void finish(CriterionResult& r, const Checker& ch, const std::string& summary) {
  r.pass = ch.failed == 0;
  std::ostringstream os;
  os << summary << "; " << (ch.total - ch.failed) << "/" << ch.total << " checks passed";
  r.detail = os.str();
  for (const auto& m : ch.messages) r.notes.push_back("failed: " + m);
}

// ---------------------------------------------------------------- criterion 1

CriterionResult formula_vs_enumeration() {
  CriterionResult r;
  r.title = "continued-fraction formulas match the minima enumeration (n = 2)";
  Checker ch;
  struct Case {
    const char* text;
    CReal xi;
  };
  const Case cases[] = {
      {"[1, golden]", CReal::golden()},
      {"[1, sqrt(2) - 1]", CReal::sqrt_int(2) - CReal::integer(1)},
  };
  const CReal half = CReal::rational(frac(1, 2));
  long points = 0, jumps = 0, direct = 0;
  for (const Case& cse : cases) {
    FrequencyVector fv = parse_frequency(cse.text);
    MinimaEngine eng(fv, full_lattice(2));
    ContinuedFractionState st;
    CReal xi = cse.xi;
    st.expand(xi, 44);
    for (int k = 1; k <= 2; ++k) {
      PiecewiseConstantFunction f = eng.psi_function(k, CReal::integer(10000), 4000000);
      PiecewiseConstantFunction g = eng.psi_prime_function(k, ZZ(10000), 4000000);
      for (long q = 1; q <= 10000; ++q) {
        CReal Q = CReal::integer(q);
        ch.check(eq(psi_explicit(st, k, PsiVariant::PSI, Q), f.eval(Q)),
                 "Psi_" + std::to_string(k) + "(" + std::to_string(q) + ") value");
        ch.check(eq(psi_explicit(st, k, PsiVariant::PSI_PRIME, Q), g.eval(Q)),
                 "Psi'_" + std::to_string(k) + "(" + std::to_string(q) + ") value");
        points += 2;
      }
      // direct enumeration queries: dense prefix, strided beyond
      for (long q = 1; q <= 10000; q += (q < 400 ? 1 : 37)) {
        CReal Q = CReal::integer(q);
        PsiResult pr = eng.psi(k, Q, 2000000);
        CReal pe = psi_explicit(st, k, PsiVariant::PSI, Q);
        ch.check(pe.is_rational() && pe.as_rational() == QQ(pr.value),
                 "direct Psi_" + std::to_string(k) + "(" + std::to_string(q) + ")");
        PsiPrimeResult pp = eng.psi_prime(k, Q, 2000000);
        ch.check(eq(pp.value, psi_explicit(st, k, PsiVariant::PSI_PRIME, Q)),
                 "direct Psi'_" + std::to_string(k) + "(" + std::to_string(q) + ")");
        ++direct;
      }
      // the left-continuous staircase: the formula reproduces the value at
      // each breakpoint and the raised value beyond it
      for (size_t i = 0; i < f.breakpoints.size(); ++i) {
        const CReal& B = f.breakpoints[i];
        ch.check(eq(psi_explicit(st, k, PsiVariant::PSI, B), f.values[i]),
                 "Psi_" + std::to_string(k) + " left value at jump " + std::to_string(i));
        CReal beyond = (i + 1 < f.breakpoints.size() ? B + f.breakpoints[i + 1]
                                                     : B + f.domain_hi) *
                       half;
        ch.check(eq(psi_explicit(st, k, PsiVariant::PSI, beyond), f.values[i + 1]),
                 "Psi_" + std::to_string(k) + " value past jump " + std::to_string(i));
        ++jumps;
      }
      // the right-continuous staircase takes the new value at its jump
      for (size_t i = 0; i < g.breakpoints.size(); ++i) {
        const CReal& B = g.breakpoints[i];
        ch.check(eq(psi_explicit(st, k, PsiVariant::PSI_PRIME, B), g.values[i + 1]),
                 "Psi'_" + std::to_string(k) + " right value at jump " + std::to_string(i));
        CReal before = (i ? g.breakpoints[i - 1] + B : g.domain_lo + B) * half;
        if (certified_lt(g.domain_lo, before))
          ch.check(eq(psi_explicit(st, k, PsiVariant::PSI_PRIME, before), g.values[i]),
                   "Psi'_" + std::to_string(k) + " value before jump " + std::to_string(i));
        ++jumps;
      }
    }
  }
  finish(r, ch,
         "2 frequencies x k in {1,2}: " + std::to_string(points) +
             " integer-Q values, " + std::to_string(direct) +
             " direct enumeration queries, " + std::to_string(jumps) + " jumps");
  return r;
}

// ---------------------------------------------------------------- criterion 2

CriterionResult duality_inequalities() {
  CriterionResult r;
  r.title = "duality: c1 Psi'_{d+1-k}(c2 Q) <= Psi_k(Q) <= c3 Psi'_{d+1-k}(c4 Q)";
  Checker ch;
  const char* alphas[] = {"[1, golden]", "[1, sqrt(2), sqrt(3)]", "[1, cbrt(2), cbrt(4)]"};
  double slack_lo = 1e300, slack_hi = 1e300;
  long sweeps = 0;
  for (const char* text : alphas) {
    FrequencyVector fv = parse_frequency(text);
    MinimaEngine eng(fv, full_lattice(fv.n));
    for (int k = 1; k <= fv.d; ++k) {
      double q0 = std::max(1.0, ub(eng.duality_check(k, CReal::integer(200), 4000000).q0));
      ch.check(q0 < 200.0, "Q0 below the sweep ceiling");
      for (int i = 0; i < 20; ++i) {
        double q = q0 * std::pow(200.0 / q0, i / 19.0);
        CReal Q = CReal::rational(frac(static_cast<long>(std::ceil(q * 16)), 16));
        DualityReport rep = eng.duality_check(k, Q, 4000000);
        ch.check(rep.lhs_ok, std::string(text) + " k=" + std::to_string(k) + " lower at Q~" + num(q));
        ch.check(rep.rhs_ok, std::string(text) + " k=" + std::to_string(k) + " upper at Q~" + num(q));
        slack_lo = std::min(slack_lo, rep.ratio_lhs);
        slack_hi = std::min(slack_hi, rep.ratio_rhs);
        ++sweeps;
      }
    }
  }
  finish(r, ch,
         std::to_string(sweeps) + " certified checks; tightest slack " + num(slack_lo) +
             " (lower) / " + num(slack_hi) + " (upper)");
  return r;
}

// ---------------------------------------------------------------- criterion 3

LatticeBasis integer_rows_lattice(const std::vector<std::vector<ZZ>>& rows) {
  LatticeBasis L;
  L.n = static_cast<int>(rows[0].size());
  L.d = static_cast<int>(rows.size());
  for (const auto& row : rows) {
    std::vector<QQ> q;
    for (const ZZ& v : row) q.push_back(QQ(v));
    L.basis.push_back(q);
  }
  std::vector<std::vector<ZZ>> gram(L.d, std::vector<ZZ>(L.d));
  for (int i = 0; i < L.d; ++i)
    for (int j = 0; j < L.d; ++j) {
      ZZ s = 0;
      for (int c = 0; c < L.n; ++c) s += rows[i][c] * rows[j][c];
      gram[i][j] = s;
    }
  L.gram_det = QQ(det_bareiss(gram));
  L.determinant = (L.n == L.d) ? CReal::integer(abs(det_bareiss(rows)))
                               : CReal::rational(L.gram_det).sqrt();
  return L;
}

CriterionResult mahler_minkowski() {
  CriterionResult r;
  r.title = "Mahler pairing and Minkowski bounds on random (body, lattice) pairs";
  Checker ch;
  std::mt19937 rng(271828);
  auto pick = [&rng](int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1));
  };
  double worst_mahler_hi = 0, worst_mahler_lo = 1e300;
  for (int inst = 0; inst < 50; ++inst) {
    int d = 2 + inst % 2;
    std::vector<CReal> comp{CReal::integer(1)};
    for (int j = 1; j < d; ++j) comp.push_back(CReal::rational(frac(pick(1, 9), pick(1, 9))));
    FrequencyVector fv = make_frequency(comp, std::nullopt);
    CReal Q = CReal::rational(frac(pick(5, 13), 4));
    CReal K = CReal::rational(frac(pick(4, 10), 4));
    Polytope C = pick(0, 1) ? primal_body(fv, Q, K) : dual_body(fv, Q, K);
    Polytope Cp = C.polar();

    std::vector<std::vector<ZZ>> rows(d, std::vector<ZZ>(d, ZZ(0)));
    for (int i = 0; i < d; ++i) {
      rows[i][i] = pick(1, 2);
      for (int j = 0; j < i; ++j) rows[i][j] = pick(-1, 1);
    }
    LatticeBasis L = integer_rows_lattice(rows);
    ZZ D = abs(det_bareiss(rows));
    LatticeBasis Ls = dual_lattice(L);
    // D * L^* is integral (the adjugate rows), so minima over L^* can be
    // computed on an integer lattice and rescaled
    std::vector<std::vector<ZZ>> drows(d, std::vector<ZZ>(d));
    bool integral = true;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        QQ v = Ls.basis[i][j] * QQ(D);
        v.canonicalize();
        integral = integral && v.get_den() == 1;
        drows[i][j] = v.get_num();
      }
    ch.check(integral, "det-scaled dual basis is integral");
    LatticeBasis Ld = integer_rows_lattice(drows);

    auto gaugeC = [&C](const std::vector<ZZ>& x) { return C.gauge(x); };
    auto gaugeCp = [&Cp](const std::vector<ZZ>& x) { return Cp.gauge(x); };
    std::vector<CReal> lam, lams;
    for (int k = 1; k <= d; ++k) {
      lam.push_back(lambda_k_gauge(gaugeC, C.outer_radius(), L, k, 6000000).value);
      lams.push_back(lambda_k_gauge(gaugeCp, Cp.outer_radius(), Ld, k, 6000000).value /
                     CReal::integer(D));
    }
    const long dfact = d == 2 ? 2 : 6;
    for (int k = 1; k <= d; ++k) {
      CReal prod = lam[k - 1] * lams[d - k];
      ch.check(certified_le(CReal::integer(1), prod),
               "Mahler lower, instance " + std::to_string(inst) + " k=" + std::to_string(k));
      ch.check(certified_le(prod, CReal::integer(dfact)),
               "Mahler upper, instance " + std::to_string(inst) + " k=" + std::to_string(k));
      worst_mahler_hi = std::max(worst_mahler_hi, ub(prod));
      worst_mahler_lo = std::min(worst_mahler_lo, prod.to_double());
    }
    CReal all = lam[0];
    for (int k = 2; k <= d; ++k) all = all * lam[k - 1];
    CReal vol = C.volume();
    ch.check(certified_le(CReal::rational(frac(1L << d, dfact)) * L.determinant, all * vol),
             "Minkowski lower, instance " + std::to_string(inst));
    ch.check(certified_le(all * vol, CReal::integer(1L << d) * L.determinant),
             "Minkowski upper, instance " + std::to_string(inst));
  }
  finish(r, ch, "50 instances (d = 2, 3); Mahler products span [" + num(worst_mahler_lo) +
                    ", " + num(worst_mahler_hi) + "]");
  return r;
}

// ---------------------------------------------------------------- criterion 4

CriterionResult periodic_approximation_bounds() {
  CriterionResult r;
  r.title = "periodic approximation basis: integrality, saturation, certified bounds";
  Checker ch;
  struct Case {
    const char* text;
    double qlo, qhi;
  };
  const Case cases[] = {{"[1, golden]", 2.5, 200.0},
                        {"[1, sqrt(2), sqrt(3)]", 4.0, 60.0},
                        {"[1, cbrt(2), cbrt(4)]", 4.0, 60.0}};
  for (const Case& cse : cases) {
    FrequencyVector fv = parse_frequency(cse.text);
    LatticeBasis L = full_lattice(fv.n);
    MinimaEngine eng(fv, L);
    const int d = fv.d;
    const CReal dC = CReal::integer(d);
    for (int i = 0; i < 20; ++i) {
      double q = cse.qlo * std::pow(cse.qhi / cse.qlo, i / 19.0);
      CReal Q = CReal::rational(frac(static_cast<long>(std::ceil(q * 8)), 8));
      std::vector<PeriodicApproximation> basis = periodic_basis(eng, Q, 4000000);
      ch.check(static_cast<int>(basis.size()) == d, "basis has d members");
      CReal psi = CReal::integer(eng.psi(d, Q, 4000000).value);
      std::vector<std::vector<ZZ>> vecs;
      for (const PeriodicApproximation& a : basis) {
        vecs.push_back(a.lattice_vector);
        bool exact = true;
        for (int c = 0; c < fv.n; ++c)
          exact = exact && eq(a.period * a.omega[c], CReal::integer(a.lattice_vector[c]));
        ch.check(exact, "T omega equals the stored integer vector");
        ch.check(lattice_member(L, a.lattice_vector), "T omega lies in Lambda");
        ch.check(q_approximation_check(fv, a), "re-derived defect certificate");
        CReal dist = (fv.alpha[0] - a.omega[0]).abs();
        for (int c = 1; c < fv.n; ++c) dist = dist.max((fv.alpha[c] - a.omega[c]).abs());
        ch.check(certified_le(dist, dC / (fv.norm_inf * a.period * Q)),
                 "|alpha - omega| <= d (|alpha| T Q)^-1");
        ch.check(certified_le(CReal::integer(1) / fv.norm_inf, a.period), "T >= |alpha|^-1");
        ch.check(certified_le(a.period, dC * psi / fv.norm_inf),
                 "T <= |alpha|^-1 d Psi_d(Q)");
      }
      // saturation: coordinates in Lambda form a unimodular matrix
      std::vector<std::vector<ZZ>> m(d, std::vector<ZZ>(d));
      bool inspan = true, intcoords = true;
      for (int a = 0; a < d && inspan; ++a) {
        std::vector<QQ> x(vecs[a].begin(), vecs[a].end());
        auto co = span_coords(L, x);
        if (!co) {
          inspan = false;
          break;
        }
        for (int b = 0; b < d; ++b) {
          intcoords = intcoords && (*co)[b].get_den() == 1;
          m[a][b] = (*co)[b].get_num();
        }
      }
      ZZ dt = inspan && intcoords ? det_bareiss(m) : ZZ(0);
      ch.check(dt == 1 || dt == -1, "the d vectors form a Z-basis of Lambda");
    }
  }
  finish(r, ch, "3 frequencies x 20 values of Q, every bound certified");
  return r;
}

// ---------------------------------------------------------------- criterion 5

CriterionResult averaging_random_fields() {
  CriterionResult r;
  r.title = "averaging step on random trigonometric fields";
  Checker ch;
  std::mt19937 rng(97);
  auto uni = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  const std::vector<ZZ> tw{ZZ(8), ZZ(5)};
  const double T = 8.0, s = 0.5, sigma = 0.25, b = 0.5;
  const AnalyticVectorField x_omega = AnalyticVectorField::constant({1.0, 0.625}, s);
  const AnalyticVectorField S(2, s);
  double worst_rem = 0, worst_disp = 0, worst_res = 0;
  for (int inst = 0; inst < 100; ++inst) {
    AnalyticVectorField P(2, s);
    const int nm = 3 + inst % 5;
    for (int j = 0; j < nm; ++j) {
      long k1 = static_cast<long>(uni(-4.49, 4.49));
      long k2 = static_cast<long>(uni(-4.49, 4.49));
      if (k1 == 0 && k2 == 0) k1 = 1;
      const int comp = rng() % 2;
      if (rng() & 1)
        P.add_cos({k1, k2}, comp, uni(-0.3, 0.3));
      else
        P.add_sin({k1, k2}, comp, uni(-0.3, 0.3));
    }
    const double target = 4e-5 * uni(0.25, 0.95);
    P = P.scaled(target / ub(majorant_norm(P, s)));

    AveragingResult res = averaging_step({tw, T, {0.0, 0.0}, S, P}, s, sigma, b);
    CReal rem = majorant_norm(res.remainder, s - sigma) +
                CReal::from_double(res.remainder.tail_bound());
    CReal cap = CReal::from_double(b) * CReal::from_double(res.epsilon);
    ch.check(certified_le(rem, cap), "N_{s-sigma}(remainder) <= b eps, instance " +
                                         std::to_string(inst));
    worst_rem = std::max(worst_rem, rem.to_double() / (b * res.epsilon));

    for (int p = 0; p < 8; ++p) {
      std::vector<double> th{uni(-3, 3), uni(-3, 3)};
      std::vector<double> to = flow_eval(res.V, 1.0, th);
      double disp = std::max(std::fabs(to[0] - th[0]), std::fabs(to[1] - th[1]));
      ch.check(disp <= T * res.epsilon * (1 + 1e-9) + 1e-12, "|V^1 - Id| <= T eps");
      worst_disp = std::max(worst_disp, disp / (T * res.epsilon));
    }

    // [x_omega, V] must reproduce P - [P] coefficient by coefficient
    AnalyticVectorField br = lie_bracket(x_omega, res.V);
    AnalyticVectorField rhs = P - periodic_average(P, tw);
    double mx = 0, dv = 0;
    for (const auto& [k, c] : rhs.modes())
      for (const auto& z : c) mx = std::max(mx, std::abs(z));
    for (const auto& [k, c] : br.modes()) {
      const ModeCoeff* o = rhs.mode(k);
      for (size_t t = 0; t < c.size(); ++t)
        dv = std::max(dv, std::abs(c[t] - (o ? (*o)[t] : std::complex<double>(0))));
    }
    for (const auto& [k, c] : rhs.modes())
      if (!br.mode(k))
        for (const auto& z : c) dv = std::max(dv, std::abs(z));
    ch.check(dv <= 1e-14 * mx, "homological residual below 1e-14 relative");
    worst_res = std::max(worst_res, mx > 0 ? dv / mx : 0.0);
  }
  finish(r, ch, "100 fields with K_max = 8; worst remainder/(b eps) = " + num(worst_rem) +
                    ", worst |V^1-Id|/(T eps) = " + num(worst_disp) +
                    ", worst bracket residual = " + num(worst_res));
  return r;
}

// ------------------------------------------------------- criteria 6 and 7

AnalyticVectorField nf_shape(double width, int cap) {
  // |k|_1 = 1 modes only, so the coefficients stay representable after the
  // e^{-2 pi width} scaling even on very wide strips
  AnalyticVectorField P(2, width, cap);
  const double w = std::exp(-2 * M_PI * width);
  P.add_cos({1, 0}, 0, 0.60 * w);
  P.add_sin({1, 0}, 1, -0.35 * w);
  P.add_sin({0, 1}, 0, 0.45 * w);
  P.add_cos({0, 1}, 1, 0.25 * w);
  return P;
}

AnalyticVectorField scaled_to(const AnalyticVectorField& P, double width, double target) {
  return P.scaled(target / ub(majorant_norm(P, width)));
}

double bound_value(const NormalFormReport& rep, const std::string& prefix) {
  for (const BoundCheck& bc : rep.bounds)
    if (bc.name.compare(0, prefix.size(), prefix) == 0) return bc.bound;
  return 0;
}

CriterionResult normal_form_sweep() {
  CriterionResult r;
  r.title = "partial normal form, golden frequency, s = 0.2, eps sweep 1e-4 .. 1e-7";
  AlphaContext ctx(parse_frequency("[1, golden]"));
  const double s = 0.2;
  const double epses[] = {1e-4, 1e-5, 1e-6, 1e-7};
  int refused = 0;
  bool ineq_ok = true;
  std::string ineq;
  std::vector<NormalFormReport> reps;
  for (double eps : epses) {
    AnalyticVectorField P = scaled_to(nf_shape(s, 32), s, 0.6 * eps);
    try {
      reps.push_back(partial_normal_form(ctx, P, s, eps, "sweep", 64));
    } catch (const ThresholdError& e) {
      ++refused;
      if (ineq.empty()) ineq = e.inequality;
      ineq_ok = ineq_ok && e.inequality == "Q(eps) >= kappa / s";
    }
  }

  if (refused == 0) {
    Checker ch;
    double prev = -1e300;
    for (const NormalFormReport& rep : reps) {
      for (const BoundCheck& bc : rep.bounds) ch.check(bc.ok, "bound: " + bc.name);
      ch.check(rep.defect <= rep.defect_budget + 1e-8, "conjugacy defect on the 64^2 grid");
      double meas = rep.schedule.back().measured_remainder;
      double decay = -std::log(std::max(meas, 1e-300) / (2 * rep.eps));
      ch.check(decay >= prev, "-ln(N(R)/2 eps) nondecreasing in Q(eps)");
      prev = decay;
    }
    finish(r, ch, "all four runs admissible");
    return r;
  }

  // every run refuses at the entry threshold; verify that refusal against
  // an independently built Delta table, then demonstrate the same bounds in
  // an admissible regime on a wide strip
  r.unattainable = true;
  r.pass = false;
  bool oracle_ok = refused == 4 && ineq_ok;
  r.detail = "all four runs refuse (" + ineq + "): kappa/s = 3840 needs eps below ~3e-8";
  {
    MinimaEngine eng(parse_frequency("[1, golden]"), full_lattice(2));
    DeltaFunction df(eng.psi_function(2, CReal::integer(4200), 4000000));
    CReal ks = ctx.kappa() * CReal::integer(5);  // kappa / s at s = 1/5
    oracle_ok = oracle_ok && eq(ks, CReal::integer(3840));
    CReal eps_max = CReal::integer(1) / (CReal::integer(2) * df.delta(ks));
    const double em = ub(eps_max);
    for (double eps : epses) oracle_ok = oracle_ok && eps > em;
    CReal q7 = df.delta_star(CReal::integer(5000000));
    oracle_ok = oracle_ok && ub(q7) < 3840.0;
    r.notes.push_back("largest admissible eps at s = 0.2 is " + num(em) +
                      "; every swept eps exceeds it, so each run must refuse");
    r.notes.push_back("Q(1e-7) = Delta*(5e6) = " + num(q7.to_double()) +
                      " < kappa/s = 3840");
  }
  bool supp_ok = true;
  {
    const double S = 60.0;
    const double sup_eps[] = {1e-4, 5e-5, 2.5e-5};
    double prev_expo = -1e300;
    for (double eps : sup_eps) {
      AnalyticVectorField P = scaled_to(nf_shape(S, 32), S, 0.6 * eps);
      NormalFormReport rep =
          partial_normal_form(ctx, P, S, eps, "wide", eps == 1e-4 ? 64 : 24);
      for (const BoundCheck& bc : rep.bounds) supp_ok = supp_ok && bc.ok;
      supp_ok = supp_ok && rep.defect <= rep.defect_budget + 1e-8;
      const double Q = rep.schedule.front().Q;
      const double expo = std::log(2.0) * S * Q / ub(ctx.kappa());
      supp_ok = supp_ok && expo >= prev_expo;
      prev_expo = expo;
      const double meas = rep.schedule.back().measured_remainder;
      r.notes.push_back(
          "s=60 eps=" + num(eps) + ": " + std::to_string(rep.schedule.size()) +
          " stages, Q(eps)=" + num(Q) + ", N(R)=" + num(meas) +
          " <= bound " + num(bound_value(rep, "N(R)")) + ", bound exponent " + num(expo));
    }
    r.notes.push_back(
        "wide-strip sweep: every theorem bound holds and the bound-side decay "
        "exponent ln2 s Q(eps)/kappa grows with Q(eps); the measured remainder "
        "sits at the tail-bookkeeping floor, far below the bound");
  }
  r.refusal_verified = oracle_ok && supp_ok;
  return r;
}

CriterionResult kam_convergence() {
  CriterionResult r;
  r.title = "KAM iteration with counter-term, golden frequency, eps = 1e-4, tol = 1e-10";
  Checker ch;
  AlphaContext ctx(parse_frequency("[1, golden]"));
  const double s = 60.0, eps = 1e-4, tol = 1e-10;
  AnalyticVectorField P = scaled_to(nf_shape(s, 32), s, 0.6 * eps);
  NormalFormReport rep = kam_iterate(ctx, P, s, eps, tol, "kam", 64);
  ch.check(!rep.schedule.empty(), "at least one stage ran");
  for (const StageRecord& st : rep.schedule) {
    const double sched = eps * std::pow(0.5, st.index);
    ch.check(std::fabs(st.eps_bound - sched) <= 1e-12 * sched, "schedule is eps 2^-m");
    ch.check(st.measured_p <= st.eps_bound * (1 + 1e-9),
             "stage " + std::to_string(st.index) + " meets its factor-2 bound");
  }
  ch.check(rep.schedule.back().measured_remainder <= tol, "iteration reached tol");
  for (const BoundCheck& bc : rep.bounds) ch.check(bc.ok, "bound: " + bc.name);
  ch.check(rep.beta.size() == 2, "counter-term has d components");
  double bmax = 0;
  for (double bc : rep.beta) bmax = std::max(bmax, std::fabs(bc));
  ch.check(bmax <= 2 * eps * (1 + 1e-9), "|beta| <= 2 eps");
  ch.check(rep.schedule.back().width_after >= s / 2, "final width >= s/2");
  ch.check(rep.defect <= 1e-8, "conjugacy defect on the 64^2 grid");

  // doubling the mode cap moves beta by at most the tail budgets
  AnalyticVectorField P2 = scaled_to(nf_shape(s, 64), s, 0.6 * eps);
  NormalFormReport rep2 = kam_iterate(ctx, P2, s, eps, tol, "kam-cap", 16);
  double dbeta = 0;
  for (size_t i = 0; i < rep.beta.size() && i < rep2.beta.size(); ++i)
    dbeta = std::max(dbeta, std::fabs(rep.beta[i] - rep2.beta[i]));
  ch.check(rep2.beta.size() == rep.beta.size() &&
               dbeta <= 1e-12 + rep.defect_budget + rep2.defect_budget,
           "beta stable under mode-cap doubling");

  finish(r, ch, std::to_string(rep.schedule.size()) + " stage(s), |beta| = " + num(bmax) +
                    ", defect = " + num(rep.defect) + ", final width = " +
                    num(rep.schedule.back().width_after) + ", beta shift on cap doubling = " +
                    num(dbeta));
  return r;
}

// ---------------------------------------------------------------- criterion 8

std::vector<double> octave_increments(const DeltaFunction& df, BrunoFlavor fl, double lo,
                                      double hi) {
  std::vector<double> inc;
  double prev = bruno_integral(df, CReal::from_double(lo), fl).to_double();
  for (double x = 2 * lo; x <= hi * (1 + 1e-9); x *= 2) {
    double v = bruno_integral(df, CReal::from_double(x), fl).to_double();
    inc.push_back(v - prev);
    prev = v;
  }
  return inc;
}

bool four_octave_decay(const std::vector<double>& inc, size_t from, double factor) {
  bool ok = inc.size() > from + 4;
  for (size_t m = from + 4; m < inc.size(); ++m)
    ok = ok && inc[m] <= factor * inc[m - 4] + 1e-15;
  return ok;
}

CriterionResult bruno_condition_evidence() {
  CriterionResult r;
  r.title = "condition-(A)/Russmann truncations: golden bounded, Liouville-type diverging";
  Checker ch;

  MinimaEngine geng(parse_frequency("[1, golden]"), full_lattice(2));
  PiecewiseConstantFunction gtab = geng.psi_function(2, CReal::integer(1000), 4000000);
  DeltaFunction gdf(gtab);
  InterpolantPhi gphi = build_phi(gtab);

  // partial quotients a_{j+1} = 2^(2^j)
  CReal lxi = CReal::from_partial_quotients(
      [](int j) -> ZZ {
        if (j > 26) throw BudgetError("partial quotient table exhausted");
        ZZ a;
        mpz_ui_pow_ui(a.get_mpz_t(), 2, 1UL << static_cast<unsigned>(j - 1));
        return a;
      },
      "liouville-2exp");
  FrequencyVector lfv = make_frequency({CReal::integer(1), lxi}, std::nullopt);
  MinimaEngine leng(lfv, full_lattice(2));
  PiecewiseConstantFunction ltab = leng.psi_function(2, CReal::integer(200), 8000000);
  DeltaFunction ldf(ltab);
  InterpolantPhi lphi = build_phi(ltab);

  // golden: over every 4-octave span the truncation increments of both
  // integrals shrink markedly -- the tails are summable
  std::vector<double> gA =
      octave_increments(gdf, BrunoFlavor::CONDITION_A, ub(gdf.x_lo()) * 1.01, gdf.x_hi().to_double() * 0.99);
  std::vector<double> gR = octave_increments(gdf, BrunoFlavor::RUSSMANN_PSI, 2.0, 1000.0);
  ch.check(four_octave_decay(gA, 2, 0.7), "golden condition-(A) increments decay");
  ch.check(four_octave_decay(gR, 1, 0.7), "golden Russmann increments decay");

  // Liouville-type: the condition-(A) increments stop decaying across the
  // flat Delta* stretch that a huge partial quotient opens up
  std::vector<double> lA =
      octave_increments(ldf, BrunoFlavor::CONDITION_A, ub(ldf.x_lo()) * 1.01, ldf.x_hi().to_double() * 0.99);
  bool stall = false;
  for (size_t m = lA.size() / 2; m < lA.size(); ++m)
    stall = stall || (m >= 4 && lA[m] > 0.8 * lA[m - 4]);
  ch.check(stall, "Liouville condition-(A) increments stop decaying");

  // Russmann side: more tail mass than golden on the common window, and the
  // Diophantine constant climbs without settling
  double gtail = (bruno_integral(gdf, CReal::integer(200), BrunoFlavor::RUSSMANN_PSI) -
                  bruno_integral(gdf, CReal::integer(40), BrunoFlavor::RUSSMANN_PSI))
                     .to_double();
  double ltail = (bruno_integral(ldf, CReal::integer(200), BrunoFlavor::RUSSMANN_PSI) -
                  bruno_integral(ldf, CReal::integer(40), BrunoFlavor::RUSSMANN_PSI))
                     .to_double();
  ch.check(ltail > gtail, "Russmann tail beyond Q = 40 exceeds the golden tail");
  DiophantineEvidence gdio = diophantine_check(gtab, 1.0);
  DiophantineEvidence ldio = diophantine_check(ltab, 1.0);
  ch.check(!gdio.growing, "golden C(tau = 1) settles");
  ch.check(ldio.growing, "Liouville C(tau = 1) keeps growing");
  ch.check(!ldio.running_c.empty() &&
               ldio.running_c.back() > 50 * ldio.running_c.front(),
           "Liouville C(tau = 1) climbs by more than 50x");

  // integration by parts on assorted truncation windows, both frequencies
  auto ibp = [&ch](const char* who, const DeltaFunction& df, const InterpolantPhi& phi,
                   double t_, double T_) {
    CReal t = CReal::from_double(t_), T = CReal::from_double(T_);
    CReal lhs = phi_stieltjes_integral(phi, t, T);
    auto lnD = [&phi](const CReal& q) { return (q * phi.eval(q)).log(); };
    auto intlnQ = [](const CReal& q) {
      return (q.log() + CReal::integer(1)) / q * CReal::integer(-1);
    };
    CReal rphi = bruno_integral(df, T, BrunoFlavor::RUSSMANN_PHI) -
                 bruno_integral(df, t, BrunoFlavor::RUSSMANN_PHI);
    CReal rhs = lnD(T) / T - lnD(t) / t + (intlnQ(T) - intlnQ(t)) + rphi;
    ch.check(certified_lt((lhs - rhs).abs(), CReal::rational(frac(1, 1000000000))),
             std::string(who) + " integration-by-parts window [" + num(t_) + ", " +
                 num(T_) + "]");
  };
  const double ghi = gphi.domain_hi().to_double() * 0.999;
  const double lhi = lphi.domain_hi().to_double() * 0.999;
  for (double t0 : {1.0, 2.0, 5.0}) {
    ibp("golden", gdf, gphi, t0, ghi);
    ibp("golden", gdf, gphi, t0, t0 * 8);
    ibp("liouville", ldf, lphi, t0, lhi);
    ibp("liouville", ldf, lphi, t0, t0 * 8);
  }
  ibp("golden", gdf, gphi, ghi / 8, ghi);
  ibp("liouville", ldf, lphi, lhi / 8, lhi);

  finish(r, ch, "golden tails decay (4-octave factor <= 0.7); Liouville-type stalls; "
                "14 integration-by-parts windows below 1e-9");
  return r;
}

// ---------------------------------------------------------------- criterion 9

CriterionResult structural_invariants() {
  CriterionResult r;
  r.title = "structural invariants: continuity sides, minima laws, lattice chain";
  Checker ch;
  const CReal half = CReal::rational(frac(1, 2));

  {  // staircase continuity sides, engine vs table, golden frequency
    MinimaEngine eng(parse_frequency("[1, golden]"), full_lattice(2));
    for (int k = 1; k <= 2; ++k) {
      PiecewiseConstantFunction f = eng.psi_function(k, CReal::integer(60), 2000000);
      ch.check(f.left_continuous, "Psi table is left-continuous");
      ch.check(f.values.size() == f.breakpoints.size() + 1, "Psi staircase shape");
      for (size_t i = 0; i + 1 < f.breakpoints.size(); ++i)
        ch.check(certified_lt(f.breakpoints[i], f.breakpoints[i + 1]),
                 "Psi breakpoints strictly increase");
      for (size_t i = 0; i + 1 < f.values.size(); ++i)
        ch.check(certified_lt(f.values[i], f.values[i + 1]), "Psi values strictly increase");
      for (size_t i = 0; i < f.breakpoints.size(); ++i) {
        const CReal& B = f.breakpoints[i];
        ch.check(eq(f.eval(B), f.values[i]), "Psi takes the lower value at its jump");
        CReal beyond = (i + 1 < f.breakpoints.size() ? B + f.breakpoints[i + 1]
                                                     : B + f.domain_hi) *
                       half;
        ch.check(eq(f.eval(beyond), f.values[i + 1]), "Psi takes the upper value past it");
      }
      PiecewiseConstantFunction g = eng.psi_prime_function(k, ZZ(60), 2000000);
      ch.check(!g.left_continuous, "Psi' table is right-continuous");
      for (size_t i = 0; i < g.breakpoints.size(); ++i) {
        const CReal& B = g.breakpoints[i];
        ch.check(eq(g.eval(B), g.values[i + 1]), "Psi' takes the new value at its jump");
        ch.check(eq(eng.psi_prime(k, B, 2000000).value, g.values[i + 1]),
                 "point query agrees at the jump");
      }
      for (long q = 1; q <= 60; ++q) {
        CReal Q = CReal::integer(q);
        ch.check(QQ(eng.psi(k, Q, 2000000).value) == f.eval(Q).as_rational(),
                 "point query matches the Psi table");
        ch.check(eq(eng.psi_prime(k, Q, 2000000).value, g.eval(Q)),
                 "point query matches the Psi' table");
      }
    }
    for (long q : {3L, 7L, 20L, 50L}) {
      CReal Q = CReal::integer(q);
      ch.check(eng.psi(1, Q).value <= eng.psi(2, Q).value, "Psi_1 <= Psi_2");
      ch.check(certified_le(eng.psi_prime(2, Q).value, eng.psi_prime(1, Q).value),
               "Psi'_2 <= Psi'_1");
      PsiPrimeResult pp = eng.psi_prime(1, Q);
      ch.check(eq(pp.value * pp.defect, CReal::integer(1)), "Psi' is the defect reciprocal");
      PsiResult pr = eng.psi(1, Q);
      ch.check(certified_le(pr.defect, CReal::integer(1) / Q), "Psi witnesses fit 1/Q");
    }
  }

  {  // successive minima: ordering, inclusion monotonicity, exact scaling
    FrequencyVector fv = parse_frequency("[3, 2]");
    MinimaEngine eng(fv, full_lattice(2));
    const CReal Q = CReal::integer(6), K = CReal::integer(2), two = CReal::integer(2);
    for (BodyKind kind : {BodyKind::PRIMAL, BodyKind::DUAL_PROBLEM}) {
      CReal l1 = eng.successive_minimum(kind, Q, K, 1).value;
      CReal l2 = eng.successive_minimum(kind, Q, K, 2).value;
      ch.check(certified_le(l1, l2), "lambda_1 <= lambda_2");
      for (int k = 1; k <= 2; ++k) {
        CReal a = eng.successive_minimum(kind, Q, K, k).value;
        // 2 C(Q, K) = C(Q/2, 2K) for the primal body, C'(2Q, K/2) for the dual
        CReal bb = kind == BodyKind::PRIMAL
                       ? eng.successive_minimum(kind, Q / two, K * two, k).value
                       : eng.successive_minimum(kind, Q * two, K / two, k).value;
        ch.check(eq(bb * two, a), "lambda scales exactly under body dilation");
      }
    }
    // inclusion monotonicity in each parameter
    CReal pK = eng.successive_minimum(BodyKind::PRIMAL, Q, K, 1).value;
    ch.check(certified_le(eng.successive_minimum(BodyKind::PRIMAL, Q, K * two, 1).value, pK),
             "larger K can only shrink lambda (primal)");
    ch.check(certified_le(pK, eng.successive_minimum(BodyKind::PRIMAL, Q * two, K, 1).value),
             "larger Q can only grow lambda (primal)");
    CReal dK = eng.successive_minimum(BodyKind::DUAL_PROBLEM, Q, K, 1).value;
    ch.check(
        certified_le(eng.successive_minimum(BodyKind::DUAL_PROBLEM, Q * two, K, 1).value, dK),
        "larger Q can only shrink lambda (dual)");
    ch.check(
        certified_le(dK, eng.successive_minimum(BodyKind::DUAL_PROBLEM, Q, K * two, 1).value),
        "larger K can only grow lambda (dual)");
  }

  {  // gauge and support homogeneity; gauge = polar support; double polar
    for (const char* text : {"[2, 1]", "[5/3, 4/3, 1]"}) {
      FrequencyVector fv = parse_frequency(text);
      for (int which = 0; which < 2; ++which) {
        Polytope C = which ? dual_body(fv, CReal::integer(3), CReal::integer(2))
                           : primal_body(fv, CReal::integer(3), CReal::integer(2));
        Polytope pol = C.polar();
        std::vector<std::vector<ZZ>> pts;
        pts.push_back(std::vector<ZZ>(fv.n, ZZ(0)));
        pts[0][0] = 1;
        pts.push_back(std::vector<ZZ>(fv.n, ZZ(1)));
        pts.push_back(std::vector<ZZ>(fv.n, ZZ(-1)));
        pts[2][0] = 2;
        for (const auto& x : pts) {
          std::vector<ZZ> x2, xm;
          std::vector<CReal> xc;
          for (const ZZ& v : x) {
            x2.push_back(v * 2);
            xm.push_back(-v);
            xc.push_back(CReal::integer(v));
          }
          ch.check(eq(C.gauge(x2), C.gauge(x) * CReal::integer(2)),
                   "gauge is positively homogeneous");
          ch.check(eq(C.gauge(xm), C.gauge(x)), "gauge is symmetric");
          ch.check(eq(C.gauge(x), pol.support(xc)), "gauge equals the polar support");
        }
        Polytope back = pol.polar();
        ch.check(back.vertices().size() == C.vertices().size(), "double polar vertex count");
        bool inside = true;
        for (const auto& v : C.vertices()) inside = inside && back.contains(v);
        ch.check(inside, "double polar contains the body");
        ch.check(eq(back.volume(), C.volume()), "double polar volume");
      }
    }
  }

  {  // lattice duality chain: Lambda inside Lambda*, det^2-scaled dual inside Lambda
    std::vector<LatticeBasis> ls;
    ls.push_back(intersect_lattice({{ZZ(2), ZZ(1)}}));
    ls.push_back(intersect_lattice({{ZZ(1), ZZ(1), ZZ(0)}, {ZZ(1), ZZ(-1), ZZ(0)}}));
    ls.push_back(intersect_lattice({{ZZ(2), ZZ(4), ZZ(6)}}));
    ls.push_back(full_lattice(3));
    for (const LatticeBasis& L : ls) {
      LatticeBasis Ls = dual_lattice(L);
      for (int i = 0; i < L.d; ++i) {
        ch.check(lattice_member(Ls, L.basis[i]), "Lambda sits inside its dual");
        std::vector<QQ> scaled;
        for (const QQ& v : Ls.basis[i]) scaled.push_back(v * L.gram_det);
        ch.check(lattice_member(L, scaled), "gram-det-scaled dual sits inside Lambda");
      }
      LatticeBasis Ldd = dual_lattice(Ls);
      bool same = true;
      for (int i = 0; i < L.d; ++i)
        same = same && lattice_member(Ldd, L.basis[i]) && lattice_member(L, Ldd.basis[i]);
      ch.check(same, "double dual is the lattice");
    }
  }

  finish(r, ch, "continuity sides, minima ordering and scaling, gauge/support identities, "
                "duality chain memberships");
  return r;
}

// ----------------------------------------------------------------- dispatch

using CriterionFn = CriterionResult (*)();

}  // namespace

std::vector<CriterionResult> run_acceptance(std::ostream& out, int only) {
  const CriterionFn table[] = {
      formula_vs_enumeration, duality_inequalities,         mahler_minkowski,
      periodic_approximation_bounds, averaging_random_fields, normal_form_sweep,
      kam_convergence,        bruno_condition_evidence,     structural_invariants,
  };
  std::vector<CriterionResult> results;
  for (int idx = 1; idx <= 9; ++idx) {
    if (only != 0 && idx != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult res;
    try {
      res = table[idx - 1]();
    } catch (const std::exception& ex) {
      res.pass = false;
      res.title = "criterion " + std::to_string(idx);
      res.detail = std::string("aborted: ") + ex.what();
    }
    res.index = idx;
    res.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream line;
    line.precision(1);
    line << std::fixed;
    line << "[" << idx << "/9] " << (res.pass ? "PASS" : "FAIL") << "  " << res.title
         << "  (" << res.seconds << " s)";
    if (!res.pass && res.unattainable && res.refusal_verified)
      line << "\n      expected failure: the stated parameters violate the run "
              "threshold; the refusal was verified against an independent table";
    out << line.str() << "\n      " << res.detail << "\n";
    for (const std::string& n : res.notes) out << "      - " << n << "\n";
    out.flush();
    results.push_back(std::move(res));
  }
  return results;
}

int unexpected_failures(const std::vector<CriterionResult>& results) {
  int n = 0;
  for (const CriterionResult& r : results)
    if (!r.pass && !(r.unattainable && r.refusal_verified)) ++n;
  return n;
}

}  // namespace dpa
