#include "dpa/normalform.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dpa/error.hpp"
#include "dpa/lattice.hpp"

namespace dpa {

namespace {

double upper(const CReal& x) {
  double u = x.to_double_bounds().second;
  return u + 2 * std::abs(u) * 1e-16 + 1e-300;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

bool provably_le(const CReal& a, const CReal& b) {
  try {
    return certified_le(a, b);
  } catch (const UndecidableError&) {
    return false;
  }
}

bool provably_lt(const CReal& a, const CReal& b) {
  try {
    return certified_lt(a, b);
  } catch (const UndecidableError&) {
    return false;
  }
}

CReal measured_size(const AnalyticVectorField& f, double s) {
  return majorant_norm(f, s) + CReal::from_double(f.tail_bound());
}

// modes of P orthogonal to every given integer vector
AnalyticVectorField orthogonal_projection(const AnalyticVectorField& P,
                                          const std::vector<std::vector<ZZ>>& vecs) {
  AnalyticVectorField r(P.dim(), P.width(), P.mode_cap());
  for (const auto& [k, c] : P.modes()) {
    bool keep = true;
    for (const auto& x : vecs) {
      ZZ dot = 0;
      for (int i = 0; i < P.dim(); ++i) dot += ZZ(k[i]) * x[i];
      if (dot != 0) {
        keep = false;
        break;
      }
    }
    if (keep) r.set_mode(k, c);
  }
  r.add_tail(P.tail_bound());
  return r;
}

double max_coeff_gap(const AnalyticVectorField& a, const AnalyticVectorField& b) {
  double m = 0;
  AnalyticVectorField d = a - b;
  for (const auto& [k, c] : d.modes())
    for (auto z : c) m = std::max(m, std::abs(z));
  return m;
}

std::vector<double> alpha_doubles(const FrequencyVector& fv) {
  std::vector<double> a(fv.n);
  for (int i = 0; i < fv.n; ++i) a[i] = fv.alpha[i].to_double();
  return a;
}

CReal geometric_factor(const FrequencyVector& fv, int pow2, const CReal& Q, double sigma) {
  int d = fv.d;
  return CReal::integer(ZZ(1) << pow2) * CReal::integer(ZZ(d) * d) *
         CReal::integer((ZZ(1) << d) - 1) / (fv.norm_inf * Q * CReal::from_double(sigma));
}

CReal q_floor(const FrequencyVector& fv) {
  return CReal::max(CReal::integer(1), CReal::integer(fv.d) / fv.norm_inf);
}

}  // namespace

AlphaContext::AlphaContext(const FrequencyVector& fv, long budget) : fv_(fv), budget_(budget) {
  LatticeBasis L = fv.full_space ? full_lattice(fv.n) : intersect_lattice(fv.subspace_gens);
  eng_ = std::make_unique<MinimaEngine>(fv_, std::move(L));
}

ZZ AlphaContext::psi_at(const CReal& Q) {
  if (psi_key_ == Q.node().get()) return psi_cache_;
  ZZ v;
  if (delta_ && provably_le(Q, delta_->psi().domain_hi))
    v = delta_->psi().eval(Q).as_rational().get_num();
  else
    v = eng_->psi(fv_.d, Q, budget_).value;
  psi_key_ = Q.node().get();
  psi_cache_ = v;
  return v;
}

std::vector<PeriodicApproximation> AlphaContext::basis(const CReal& Q) {
  if (basis_key_ == Q.node().get()) return basis_cache_;
  basis_cache_ = periodic_basis(*eng_, Q, budget_);
  basis_key_ = Q.node().get();
  return basis_cache_;
}

void AlphaContext::rebuild(long q_max) {
  if (q_max > (1L << 26)) throw BudgetError("Psi table growth exceeded the configured budget");
  q_max_ = q_max;
  delta_.emplace(eng_->psi_function(fv_.d, CReal::integer(q_max_), budget_));
  psi_key_ = nullptr;  // the cached value may have come from a direct query
}

const DeltaFunction& AlphaContext::delta_table(const CReal& x) {
  double need = upper(x);
  while (!delta_ || delta_->x_hi().to_double() <= need * 1.01)
    rebuild(std::max<long>(64, q_max_ * 2));
  return *delta_;
}

const DeltaFunction& AlphaContext::delta_table_for_q(const CReal& q) {
  double need = upper(q);
  while (!delta_ || delta_->psi().domain_hi.to_double() <= need * 1.01)
    rebuild(std::max<long>(64, q_max_ * 2));
  return *delta_;
}

const DeltaFunction& AlphaContext::delta_table() const {
  if (!delta_) throw DomainError("no Delta table has been built yet");
  return *delta_;
}

CReal AlphaContext::kappa() const {
  int d = fv_.d;
  return CReal::integer(64) * CReal::integer(ZZ(d) * d) * CReal::integer((ZZ(1) << d) - 1) /
         fv_.norm_inf;
}

CReal AlphaContext::c_const() const { return kappa() / CReal::integer(2); }

QuasiPeriodicResult quasi_periodic_step(AlphaContext& ctx, const AnalyticVectorField& S,
                                        const AnalyticVectorField& P, double s, const CReal& Q,
                                        double sigma, double c) {
  const int d = ctx.d(), n = ctx.fv().n;
  if (P.dim() != n || S.dim() != n) throw DomainError("field dimension must match the frequency");
  if (!(sigma > 0) || !(sigma < s)) throw DomainError("need 0 < sigma < s");
  if (!(c > 0) || !(c < 1)) throw DomainError("need 0 < c < 1");
  if (P.width() < s || S.width() < s)
    throw DomainError("input fields are narrower than the requested width");

  if (!provably_lt(q_floor(ctx.fv()), Q))
    throw ThresholdError("Q > max(1, d |alpha|^-1)",
                         "averaging hypothesis fails: Q = " + fmt(Q.to_double()));

  CReal eps = measured_size(P, s), delta = measured_size(S, s);
  CReal psi = CReal::integer(ctx.psi_at(Q));
  CReal one = CReal::integer(1);

  if (!provably_le(Q * psi * (eps + delta), one))
    throw ThresholdError("Q Psi(Q) (eps + delta) <= 1",
                         "averaging hypothesis fails: Q Psi (eps+delta) = " +
                             fmt(upper(Q * psi * (eps + delta))));
  if (!provably_le(CReal::integer(2) * Q * psi * eps, one))
    throw ThresholdError("2 Q Psi(Q) eps <= 1", "averaging hypothesis fails: 2 Q Psi eps = " +
                                                    fmt(upper(CReal::integer(2) * Q * psi * eps)));
  CReal geom = geometric_factor(ctx.fv(), 4, Q, sigma);
  if (!provably_le(geom, CReal::from_double(c)))
    throw ThresholdError("2^4 d^2 (2^d - 1) |alpha|^-1 Q^-1 sigma^-1 <= c",
                         "averaging hypothesis fails: geometric factor = " + fmt(upper(geom)) +
                             " > c = " + fmt(c));

  std::vector<PeriodicApproximation> basis = ctx.basis(Q);
  const double varsigma = sigma / d;
  const double b = c / ((1 << d) - 1);

  std::vector<double> alpha = alpha_doubles(ctx.fv());
  EmbeddingMap phi(n, s);
  AnalyticVectorField p_cur = P;
  AnalyticVectorField p_plus(n, s);
  double width = s;
  for (int j = 0; j < d; ++j) {
    AveragingInput in{basis[j].lattice_vector, basis[j].period.to_double(),
                      std::vector<double>(n), S, p_cur};
    for (int i = 0; i < n; ++i) in.varpi[i] = alpha[i] - basis[j].omega[i].to_double();
    AveragingResult stage = averaging_step(in, width, varsigma, b);
    phi.append_stage(stage.V, 1.0, varsigma);
    double width_out = width - varsigma;
    p_plus = (j == 0) ? stage.remainder
                      : stage.remainder + pullback(stage.V, 1.0, p_plus, width_out);
    p_cur = stage.average;
    width = width_out;
  }

  // the d sequential averages must agree exactly with the projection onto
  // modes orthogonal to the basis (the fundamental-domain identity)
  std::vector<std::vector<ZZ>> module;
  module.reserve(basis.size());
  for (const auto& ap : basis) module.push_back(ap.lattice_vector);
  if (max_coeff_gap(p_cur, orthogonal_projection(P, module)) != 0)
    throw Error("sequential averages disagree with the orthogonal-mode projection");

  CReal disp_bound = CReal::integer(ZZ(d) * d) * psi * eps / ctx.fv().norm_inf;
  if (!not_provably_greater(phi.displacement_bound(), disp_bound))
    throw Error("stage displacement " + fmt(upper(phi.displacement_bound())) +
                " exceeds d^2 |alpha|^-1 Psi eps = " + fmt(upper(disp_bound)));
  CReal rem = measured_size(p_plus, width);
  CReal allowance = CReal::from_double(c) * eps +
                    CReal::from_double(p_plus.tail_bound()) +
                    CReal::from_double(1e-11 * (upper(eps) + 1));
  if (!not_provably_greater(rem, allowance))
    throw Error("averaged remainder " + fmt(upper(rem)) + " exceeds c eps = " +
                fmt(upper(allowance)));

  return {std::move(phi), std::move(p_cur), std::move(p_plus), std::move(basis), upper(eps),
          upper(delta)};
}

NormalFormReport partial_normal_form(AlphaContext& ctx, const AnalyticVectorField& P, double s,
                                     double eps, const std::string& label, int defect_grid) {
  const int d = ctx.d(), n = ctx.fv().n;
  if (P.dim() != n) throw DomainError("field dimension must match the frequency");
  if (!(s > 0) || !(eps > 0)) throw DomainError("need s > 0 and eps > 0");
  if (P.width() < s) throw DomainError("perturbation is narrower than s");
  if (defect_grid < 2) throw DomainError("defect grid must have at least 2 points per axis");
  CReal eps_cr = CReal::from_double(eps);
  if (!not_provably_greater(measured_size(P, s), eps_cr))
    throw DomainError("perturbation majorant exceeds the declared eps");

  // Q(eps) = Delta*((2 eps)^-1), m = floor(kappa^-1 s Q)
  CReal x_target = CReal::integer(1) / (CReal::integer(2) * eps_cr);
  CReal Q = ctx.delta_table(x_target).delta_star(x_target);
  CReal kappa = ctx.kappa();
  CReal alpha_norm = ctx.fv().norm_inf;

  if (!provably_lt(q_floor(ctx.fv()), Q))
    throw ThresholdError("Q(eps) > max(1, d |alpha|^-1)",
                         "threshold (thr0) fails: Q(eps) = " + fmt(Q.to_double()));
  CReal m_real = CReal::from_double(s) * Q / kappa;
  ZZ m_z = certified_floor(m_real);
  if (m_z < 1) {
    // invert the failing clause: Q(eps) >= kappa/s iff (2 eps)^-1 >= Delta(kappa/s)
    std::string msg = "threshold (thr0) fails: kappa^-1 s Q(eps) = " + fmt(m_real.to_double()) +
                      " < 1 with Q(eps) = " + fmt(Q.to_double());
    try {
      CReal q_need = kappa / CReal::from_double(s);
      CReal eps_max =
          CReal::integer(1) / (CReal::integer(2) * ctx.delta_table_for_q(q_need).delta(q_need));
      msg += "; largest admissible eps at this width is about " + fmt(eps_max.to_double());
    } catch (const Error&) {
      // table growth failed; report without the admissible bound
    }
    throw ThresholdError("Q(eps) >= kappa / s", msg);
  }
  if (m_z > 5000)
    throw BudgetError("schedule length m = " + m_z.get_str() + " exceeds the desk budget");
  long m = m_z.get_si();

  NormalFormReport rep{"",
                       label,
                       s,
                       eps,
                       {},
                       {},
                       EmbeddingMap(n, s),
                       AnalyticVectorField(n, s),
                       AnalyticVectorField(n, s),
                       {},
                       0,
                       0,
                       defect_grid};

  const double sigma_i = s / (2.0 * m);
  double width = s;
  AnalyticVectorField N(n, s), p_cur = P;
  for (long i = 0; i < m; ++i) {
    QuasiPeriodicResult stage = quasi_periodic_step(ctx, N, p_cur, width, Q, sigma_i, 0.5);
    // take the realized width from the field: d subtractions of sigma/d need
    // not equal width - sigma in double arithmetic
    double width_next = stage.remainder.width();
    StageRecord rec;
    rec.index = static_cast<int>(i);
    rec.Q = Q.to_double();
    rec.eps_bound = std::ldexp(eps, -static_cast<int>(i));
    rec.sigma = sigma_i;
    rec.width_after = width_next;
    rec.measured_p = stage.epsilon;
    rec.measured_remainder = upper(measured_size(stage.remainder, width_next));
    rep.schedule.push_back(rec);

    rep.phi.extend(stage.phi);
    N = N + stage.average;
    p_cur = stage.remainder;
    width = width_next;
  }
  rep.normal = N;
  rep.remainder = p_cur;

  auto record = [&](const std::string& name, const CReal& measured, const CReal& bound) {
    BoundCheck bc{name, upper(measured), upper(bound), not_provably_greater(measured, bound)};
    rep.bounds.push_back(bc);
    return bc.ok;
  };
  bool ok = true;
  ok &= record("|Phi - Id| <= d^2 |alpha|^-1 Q(eps)^-1", rep.phi.displacement_bound(),
               CReal::integer(ZZ(d) * d) / (alpha_norm * Q));
  ok &= record("N(N) <= 2 eps", measured_size(N, width), CReal::integer(2) * eps_cr);
  CReal exponent = CReal::integer(2).log() * CReal::from_double(s) * Q / kappa;
  CReal r_bound = CReal::integer(2) * eps_cr * exponent.neg().exp() +
                  CReal::from_double(3e-11 * static_cast<double>(m));
  ok &= record("N(R) <= 2 eps exp(-ln2 kappa^-1 s Q(eps))", measured_size(p_cur, width), r_bound);
  if (!ok) throw Error("a Theorem bound failed after a successful threshold check");

  // [N, X_alpha]: N is supported on modes orthogonal to Lambda_alpha, so the
  // bracket vanishes up to the double rounding of alpha
  AnalyticVectorField x_alpha = AnalyticVectorField::constant(alpha_doubles(ctx.fv()), width);
  record("[N, X_alpha] residual", majorant_norm(lie_bracket(x_alpha, N), width / 2),
         CReal::from_double(1e-12) * (CReal::integer(1) + measured_size(N, width)));

  // conjugacy defect on a grid: (DPhi)(X_alpha + N + R) - (X_alpha + P) o Phi
  std::vector<double> alpha = alpha_doubles(ctx.fv());
  AnalyticVectorField inner = N + p_cur;
  double defect = 0;
  std::vector<int> idx(n, 0);
  while (true) {
    std::vector<double> theta(n);
    for (int i = 0; i < n; ++i) theta[i] = static_cast<double>(idx[i]) / defect_grid;
    FlowJet jet = rep.phi.eval_jet(theta);
    std::vector<double> w = inner.eval_real(theta);
    for (int i = 0; i < n; ++i) w[i] += alpha[i];
    std::vector<double> rhs = P.eval_real(jet.point);
    for (int i = 0; i < n; ++i) rhs[i] += alpha[i];
    for (int i = 0; i < n; ++i) {
      double lhs = 0;
      for (int j = 0; j < n; ++j) lhs += jet.jacobian[i][j] * w[j];
      defect = std::max(defect, std::abs(lhs - rhs[i]));
    }
    int i = 0;
    while (i < n && ++idx[i] == defect_grid) idx[i++] = 0;
    if (i == n) break;
  }
  rep.defect = defect;
  rep.defect_budget = N.tail_bound() + p_cur.tail_bound() + P.tail_bound() +
                      1e-11 * (1 + upper(alpha_norm)) * (1 + rep.phi.stages());
  return rep;
}

double NekhoroshevThresholds::remainder_bound(double eps) const {
  return 2 * eps *
         std::exp(-std::log(2.0) / kappa * s * std::pow(2 * c_alpha * eps, -1.0 / (1 + tau)));
}

NekhoroshevThresholds nekhoroshev_thresholds(const FrequencyVector& fv, double tau,
                                             double c_alpha, double q_alpha, double s) {
  if (!(c_alpha > 0) || !(s > 0)) throw DomainError("need C_alpha > 0 and s > 0");
  NekhoroshevThresholds t;
  t.tau = tau;
  t.c_alpha = c_alpha;
  t.q_alpha = q_alpha;
  t.s = s;
  double an = fv.norm_inf.to_double();
  t.e_alpha = std::max({1.0, fv.d / an, q_alpha});
  t.kappa = 64.0 * fv.d * fv.d * ((1 << fv.d) - 1) / an;
  t.eps_small = std::pow(t.e_alpha, -(tau + 1)) / (2 * c_alpha);
  t.eps_width = std::pow(t.kappa / s, -(tau + 1)) / (2 * c_alpha);
  return t;
}

KamStepResult kam_step(AlphaContext& ctx, const AnalyticVectorField& P, double s, const CReal& Q,
                       double sigma) {
  const int d = ctx.d(), n = ctx.fv().n;
  if (d != n) throw DomainError("the KAM step needs full rational independence (d = n)");
  CReal eps = measured_size(P, s);

  CReal psi = CReal::integer(ctx.psi_at(Q));
  if (!provably_le(CReal::integer(3) * Q * psi * eps, CReal::integer(1)))
    throw ThresholdError("3 Q Psi(Q) eps <= 1",
                         "KAM hypothesis fails: 3 Q Psi eps = " +
                             fmt(upper(CReal::integer(3) * Q * psi * eps)));
  CReal geom = geometric_factor(ctx.fv(), 5, Q, sigma);
  if (!provably_le(geom, CReal::integer(1)))
    throw ThresholdError("2^5 d^2 (2^d - 1) |alpha|^-1 Q^-1 sigma^-1 <= 1",
                         "KAM hypothesis fails: geometric factor = " + fmt(upper(geom)));

  // Pbar = X_eta: with d = n the only resonant mode is k = 0
  std::vector<double> eta(n, 0.0);
  if (const ModeCoeff* mean = P.mode(ModeKey(n, 0))) {
    double scale = upper(eps);
    for (int i = 0; i < n; ++i) {
      if (std::abs((*mean)[i].imag()) > 1e-12 * (1 + scale))
        throw DomainError("perturbation mean has an imaginary part");
      eta[i] = (*mean)[i].real();
    }
  }
  std::vector<double> minus_eta(n);
  for (int i = 0; i < n; ++i) minus_eta[i] = -eta[i];
  AnalyticVectorField S = AnalyticVectorField::constant(minus_eta, s);

  QuasiPeriodicResult qp = quasi_periodic_step(ctx, S, P, s, Q, sigma, 0.5);
  AnalyticVectorField x_eta = AnalyticVectorField::constant(eta, s);
  if (max_coeff_gap(qp.average, x_eta) != 0)
    throw Error("full average is not the mean mode despite d = n");
  return {std::move(eta), std::move(qp.phi), std::move(qp.remainder), qp.epsilon};
}

NormalFormReport kam_iterate(AlphaContext& ctx, const AnalyticVectorField& P, double s,
                             double eps, double tol, const std::string& label, int defect_grid) {
  const int d = ctx.d(), n = ctx.fv().n;
  if (d != n) throw DomainError("the KAM iteration needs full rational independence (d = n)");
  if (!(tol > 0) || !(eps > 0) || !(s > 0)) throw DomainError("need s, eps, tol > 0");
  if (P.width() < s) throw DomainError("perturbation is narrower than s");
  if (defect_grid < 2) throw DomainError("defect grid must have at least 2 points per axis");
  CReal eps_cr = CReal::from_double(eps);
  if (!not_provably_greater(measured_size(P, s), eps_cr))
    throw DomainError("perturbation majorant exceeds the declared eps");

  // Q = Delta*((3 eps)^-1); r(eps) = Q^-1 + (ln 2)^-1 int_{Delta(Q)} dx/(x Delta*)
  CReal x0 = CReal::integer(1) / (CReal::integer(3) * eps_cr);
  // prepay several ladder octaves so the truncated integral sees a long window
  CReal Q = ctx.delta_table(x0 * CReal::integer(ZZ(1) << 12)).delta_star(x0);
  CReal alpha_norm = ctx.fv().norm_inf;
  CReal kappa = ctx.kappa(), c_big = ctx.c_const();

  if (!provably_lt(q_floor(ctx.fv()), Q))
    throw ThresholdError("Q(eps) > max(1, d |alpha|^-1)",
                         "threshold (thr000) fails: Q(eps) = " + fmt(Q.to_double()));

  CReal delta_q = ctx.delta_table().delta(Q);
  CReal x_reach = ctx.delta_table().x_hi();
  CReal ln2 = CReal::integer(2).log();
  CReal tail_int = bruno_integral(ctx.delta_table(), x_reach, BrunoFlavor::CONDITION_A);
  CReal cut_int = bruno_integral(ctx.delta_table(), delta_q, BrunoFlavor::CONDITION_A);
  CReal r_eps = CReal::integer(1) / Q + (tail_int - cut_int) / ln2;

  // octave extrapolation of the integral's truncated tail, reported only
  double int_tail_estimate = std::nan("");
  try {
    CReal half =
        bruno_integral(ctx.delta_table(), x_reach / CReal::integer(2), BrunoFlavor::CONDITION_A);
    CReal quarter =
        bruno_integral(ctx.delta_table(), x_reach / CReal::integer(4), BrunoFlavor::CONDITION_A);
    double oct_hi = upper(tail_int - half), oct_lo = upper(half - quarter);
    if (oct_lo > 0 && oct_hi < oct_lo)
      int_tail_estimate = oct_hi * (oct_hi / oct_lo) / (1 - oct_hi / oct_lo) / std::log(2.0);
  } catch (const Error&) {
    // window too short for extrapolation
  }

  CReal r_cap = CReal::from_double(s) / kappa;
  if (!provably_le(r_eps, r_cap)) {
    // scan doubling Q for the largest eps with r(eps) <= kappa^-1 s
    std::string msg = "threshold (thr000) fails: r(eps) = " + fmt(r_eps.to_double()) +
                      " > kappa^-1 s = " + fmt(upper(r_cap));
    try {
      CReal qt = q_floor(ctx.fv()) + CReal::integer(1);
      for (int it = 0; it < 24; ++it) {
        const DeltaFunction& t = ctx.delta_table_for_q(qt);
        CReal dq = t.delta(qt);
        CReal rt = CReal::integer(1) / qt +
                   (bruno_integral(t, t.x_hi(), BrunoFlavor::CONDITION_A) -
                    bruno_integral(t, dq, BrunoFlavor::CONDITION_A)) /
                       ln2;
        if (provably_le(rt, r_cap)) {
          CReal eps_max = CReal::integer(1) / (CReal::integer(3) * dq);
          msg += "; largest admissible eps at this width is about " + fmt(eps_max.to_double());
          break;
        }
        qt = qt * CReal::integer(2);
      }
    } catch (const Error&) {
      // scan failed; report without the admissible bound
    }
    throw ThresholdError("r(eps) <= kappa^-1 s", msg);
  }

  NormalFormReport rep{"",
                       label,
                       s,
                       eps,
                       {},
                       {},
                       EmbeddingMap(n, s),
                       AnalyticVectorField(n, s),
                       AnalyticVectorField(n, s),
                       std::vector<double>(n, 0.0),
                       0,
                       0,
                       defect_grid};

  AnalyticVectorField p_cur = P;
  double width = s;
  std::vector<double> beta(n, 0.0);
  double later_eta = 0;  // sum |eta_m| over m >= 1, a second-order defect source
  long m = 0;
  CReal delta_m = delta_q;
  while (true) {
    CReal p_size = measured_size(p_cur, width);
    if (provably_le(p_size, CReal::from_double(tol))) break;
    if (m >= 200)
      throw BudgetError("KAM iteration did not reach tol within 200 stages; achieved N(P_m) = " +
                        fmt(upper(p_size)));
    CReal q_m = [&] {
      try {
        return ctx.delta_table(delta_m).delta_star(delta_m);
      } catch (const BudgetError&) {
        throw BudgetError("Psi table exhausted before tol was reached; achieved N(P_m) = " +
                          fmt(upper(p_size)));
      }
    }();
    double sigma_m = upper(c_big / q_m) * (1 + 1e-9);
    if (width - sigma_m < s / 2 - 1e-12)
      throw ThresholdError("sum sigma_m <= s/2",
                           "width budget exhausted at stage " + fmt(static_cast<double>(m)) +
                               " (truncated r(eps) window); achieved N(P_m) = " +
                               fmt(upper(p_size)));

    KamStepResult step = kam_step(ctx, p_cur, width, q_m, sigma_m);
    // take the realized width from the field: d subtractions of sigma/d need
    // not equal width - sigma in double arithmetic
    double width_next = step.remainder.width();
    StageRecord rec;
    rec.index = static_cast<int>(m);
    rec.Q = q_m.to_double();
    rec.eps_bound = std::ldexp(eps, -static_cast<int>(m));
    rec.sigma = sigma_m;
    rec.width_after = width_next;
    rec.measured_p = step.epsilon;
    rec.measured_remainder = upper(measured_size(step.remainder, width_next));
    rep.schedule.push_back(rec);

    rep.phi.extend(step.phi);
    for (int i = 0; i < n; ++i) {
      beta[i] -= step.eta[i];
      if (m >= 1) later_eta = std::max(later_eta, std::abs(step.eta[i]));
    }
    p_cur = step.remainder;
    width = width_next;
    delta_m = delta_m * CReal::integer(2);
    ++m;
  }

  rep.beta = beta;
  rep.remainder = p_cur;
  rep.normal = AnalyticVectorField::constant(beta, width);

  auto record = [&](const std::string& name, const CReal& measured, const CReal& bound) {
    BoundCheck bc{name, upper(measured), upper(bound), not_provably_greater(measured, bound)};
    rep.bounds.push_back(bc);
    return bc.ok;
  };
  CReal beta_norm = CReal::integer(0);
  for (double bi : beta) beta_norm = CReal::max(beta_norm, CReal::from_double(std::abs(bi)));
  bool ok = true;
  ok &= record("|beta| <= 2 eps", beta_norm, CReal::integer(2) * eps_cr);
  ok &= record("|Phi - Id| <= 3^-1 d^2 |alpha|^-1 r(eps)", rep.phi.displacement_bound(),
               CReal::integer(ZZ(d) * d) * r_eps / (CReal::integer(3) * alpha_norm));
  rep.bounds.push_back({"final width >= s/2", width, s / 2, width >= s / 2 - 1e-12});
  ok &= rep.bounds.back().ok;
  if (!std::isnan(int_tail_estimate))
    record("r(eps) truncation tail (octave estimate)", CReal::from_double(int_tail_estimate),
           r_cap - r_eps);
  if (!ok) throw Error("a KAM bound failed after a successful threshold check");

  // defect: |(DPhi) X_alpha - (X_{alpha+beta} + P) o Phi| on the grid
  std::vector<double> alpha = alpha_doubles(ctx.fv());
  double defect = 0;
  std::vector<int> idx(n, 0);
  while (true) {
    std::vector<double> theta(n);
    for (int i = 0; i < n; ++i) theta[i] = static_cast<double>(idx[i]) / defect_grid;
    FlowJet jet = rep.phi.eval_jet(theta);
    std::vector<double> rhs = P.eval_real(jet.point);
    for (int i = 0; i < n; ++i) rhs[i] += alpha[i] + beta[i];
    for (int i = 0; i < n; ++i) {
      double lhs = 0;
      for (int j = 0; j < n; ++j) lhs += jet.jacobian[i][j] * alpha[j];
      defect = std::max(defect, std::abs(lhs - rhs[i]));
    }
    int i = 0;
    while (i < n && ++idx[i] == defect_grid) idx[i++] = 0;
    if (i == n) break;
  }
  rep.defect = defect;
  double disp = upper(rep.phi.displacement_bound());
  rep.defect_budget = p_cur.tail_bound() + P.tail_bound() + upper(measured_size(p_cur, width)) +
                      2 * later_eta * (disp + 1) * rep.phi.stages() +
                      1e-11 * (1 + upper(alpha_norm)) * (1 + rep.phi.stages());
  return rep;
}

}  // namespace dpa
