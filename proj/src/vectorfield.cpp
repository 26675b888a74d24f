#include "dpa/vectorfield.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

#include "dpa/error.hpp"

namespace dpa {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

long l1(const ModeKey& k) {
  long s = 0;
  for (long v : k) s += std::labs(v);
  return s;
}

bool all_zero(const ModeCoeff& c) {
  for (auto z : c)
    if (z != std::complex<double>(0, 0)) return false;
  return true;
}

double coeff_inf(const ModeCoeff& c) {
  double m = 0;
  for (auto z : c) m = std::max(m, std::abs(z));
  return m;
}

ModeKey negate(const ModeKey& k) {
  ModeKey m(k.size());
  for (size_t i = 0; i < k.size(); ++i) m[i] = -k[i];
  return m;
}

// double upper bound of a nonnegative CReal, padded by two ulps
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

}  // namespace

AnalyticVectorField::AnalyticVectorField(int dim, double width, int mode_cap)
    : n_(dim), width_(width), mode_cap_(mode_cap) {
  if (dim < 1) throw DomainError("vector field dimension must be positive");
  if (!(width > 0)) throw DomainError("vector field width must be positive");
  if (mode_cap < 0) throw DomainError("mode cap must be nonnegative");
}

AnalyticVectorField AnalyticVectorField::constant(const std::vector<double>& c, double width,
                                                  int mode_cap) {
  AnalyticVectorField f(static_cast<int>(c.size()), width, mode_cap);
  ModeCoeff z(c.size());
  for (size_t i = 0; i < c.size(); ++i) z[i] = c[i];
  f.set_mode(ModeKey(c.size(), 0), z);
  return f;
}

void AnalyticVectorField::set_mode(const ModeKey& k, const ModeCoeff& c) {
  if (static_cast<int>(k.size()) != n_ || static_cast<int>(c.size()) != n_)
    throw DomainError("mode index and coefficient must have the field dimension");
  if (l1(k) > mode_cap_) throw DomainError("mode index exceeds the mode cap");
  if (all_zero(c))
    modes_.erase(k);
  else
    modes_[k] = c;
}

const ModeCoeff* AnalyticVectorField::mode(const ModeKey& k) const {
  auto it = modes_.find(k);
  return it == modes_.end() ? nullptr : &it->second;
}

void AnalyticVectorField::add_cos(const ModeKey& k, int comp, double amp) {
  for (const ModeKey& key : {k, negate(k)}) {
    ModeCoeff c = mode(key) ? *mode(key) : ModeCoeff(n_);
    c[comp] += amp / 2;
    set_mode(key, c);
  }
}

void AnalyticVectorField::add_sin(const ModeKey& k, int comp, double amp) {
  // sin = (e^{ik.} - e^{-ik.}) / (2i)
  ModeCoeff cp = mode(k) ? *mode(k) : ModeCoeff(n_);
  cp[comp] += std::complex<double>(0, -amp / 2);
  set_mode(k, cp);
  ModeKey nk = negate(k);
  ModeCoeff cm = mode(nk) ? *mode(nk) : ModeCoeff(n_);
  cm[comp] += std::complex<double>(0, amp / 2);
  set_mode(nk, cm);
}

bool AnalyticVectorField::real_valued() const {
  for (const auto& [k, c] : modes_) {
    const ModeCoeff* opp = mode(negate(k));
    if (!opp) return false;
    for (int i = 0; i < n_; ++i)
      if ((*opp)[i] != std::conj(c[i])) return false;
  }
  return true;
}

long AnalyticVectorField::top_degree() const {
  long d = 0;
  for (const auto& [k, c] : modes_) d = std::max(d, l1(k));
  return d;
}

std::vector<double> AnalyticVectorField::eval_real(const std::vector<double>& theta) const {
  ModeCoeff v = eval_shifted(theta, 0.0);
  std::vector<double> out(n_);
  for (int i = 0; i < n_; ++i) out[i] = v[i].real();
  return out;
}

ModeCoeff AnalyticVectorField::eval_shifted(const std::vector<double>& theta, double im) const {
  if (static_cast<int>(theta.size()) != n_)
    throw DomainError("evaluation point must have the field dimension");
  ModeCoeff out(n_);
  for (const auto& [k, c] : modes_) {
    double phase = 0;
    long ksum = 0;
    for (int i = 0; i < n_; ++i) {
      phase += k[i] * theta[i];
      ksum += k[i];
    }
    // e^{2 pi i k.(theta + i im 1)} = e^{2 pi i k.theta} e^{-2 pi im sum k}
    std::complex<double> factor =
        std::polar(std::exp(-kTwoPi * im * ksum), kTwoPi * phase);
    for (int i = 0; i < n_; ++i) out[i] += factor * c[i];
  }
  return out;
}

AnalyticVectorField AnalyticVectorField::operator+(const AnalyticVectorField& o) const {
  if (n_ != o.n_) throw DomainError("vector field dimensions differ");
  AnalyticVectorField r(n_, std::min(width_, o.width_), std::max(mode_cap_, o.mode_cap_));
  r.modes_ = modes_;
  for (const auto& [k, c] : o.modes_) {
    ModeCoeff acc = r.mode(k) ? *r.mode(k) : ModeCoeff(n_);
    for (int i = 0; i < n_; ++i) acc[i] += c[i];
    r.set_mode(k, acc);
  }
  r.tail_bound_ = tail_bound_ + o.tail_bound_;
  return r;
}

AnalyticVectorField AnalyticVectorField::operator-(const AnalyticVectorField& o) const {
  return *this + o.scaled(-1);
}

AnalyticVectorField AnalyticVectorField::scaled(double c) const {
  AnalyticVectorField r = *this;
  for (auto& [k, v] : r.modes_)
    for (auto& z : v) z *= c;
  r.tail_bound_ = tail_bound_ * std::abs(c);
  return r;
}

CReal majorant_norm(const AnalyticVectorField& P, double s_prime) {
  if (s_prime > P.width())
    throw DomainError("majorant width exceeds the field's analyticity width");
  if (s_prime < 0) throw DomainError("majorant width must be nonnegative");
  // group modes by |k|_1 so each exponential weight appears once
  std::map<long, CReal> mass;
  for (const auto& [k, c] : P.modes()) {
    CReal m = CReal::from_double(std::abs(c[0].real()));
    for (int i = 0; i < P.dim(); ++i) {
      const auto z = c[i];
      CReal a = (z.imag() == 0)
                    ? CReal::from_double(std::abs(z.real()))
                    : (CReal::from_double(z.real()) * CReal::from_double(z.real()) +
                       CReal::from_double(z.imag()) * CReal::from_double(z.imag()))
                          .sqrt();
      m = (i == 0) ? a : CReal::max(m, a);
    }
    auto [it, fresh] = mass.emplace(l1(k), m);
    if (!fresh) it->second = it->second + m;
  }
  CReal total = CReal::integer(0);
  for (const auto& [deg, m] : mass) {
    if (deg == 0)
      total = total + m;
    else
      total = total + m * (CReal::integer(2) * CReal::pi() * CReal::from_double(s_prime) *
                           CReal::integer(deg))
                              .exp();
  }
  return total;
}

double grid_sup_estimate(const AnalyticVectorField& P, double s_prime) {
  if (s_prime > P.width())
    throw DomainError("sampling width exceeds the field's analyticity width");
  const int n = P.dim(), G = 64;
  // roots of unity table: e^{2 pi i a / G}
  std::vector<std::complex<double>> root(G);
  for (int a = 0; a < G; ++a) root[a] = std::polar(1.0, kTwoPi * a / G);

  struct Entry {
    ModeKey k;
    ModeCoeff c;
    long ksum;
  };
  std::vector<Entry> entries;
  for (const auto& [k, c] : P.modes()) {
    long s = 0;
    for (long v : k) s += v;
    entries.push_back({k, c, s});
  }

  double best = 0;
  for (double im : {0.0, s_prime, -s_prime}) {
    std::vector<std::complex<double>> decayed;
    for (const auto& e : entries) decayed.push_back(std::polar(std::exp(-kTwoPi * im * e.ksum), 0.0));
    std::vector<int> a(n, 0);
    ModeCoeff acc(n);
    while (true) {
      std::fill(acc.begin(), acc.end(), std::complex<double>(0, 0));
      for (size_t e = 0; e < entries.size(); ++e) {
        long idx = 0;
        for (int i = 0; i < n; ++i) idx += entries[e].k[i] * a[i];
        idx %= G;
        if (idx < 0) idx += G;
        std::complex<double> f = root[idx] * decayed[e];
        for (int i = 0; i < n; ++i) acc[i] += f * entries[e].c[i];
      }
      best = std::max(best, coeff_inf(acc));
      int i = 0;
      while (i < n && ++a[i] == G) a[i++] = 0;
      if (i == n) break;
    }
  }
  return best;
}

AnalyticVectorField periodic_average(const AnalyticVectorField& P,
                                     const std::vector<ZZ>& t_omega) {
  if (static_cast<int>(t_omega.size()) != P.dim())
    throw DomainError("period vector must have the field dimension");
  AnalyticVectorField r(P.dim(), P.width(), P.mode_cap());
  for (const auto& [k, c] : P.modes()) {
    ZZ dot = 0;
    for (int i = 0; i < P.dim(); ++i) dot += ZZ(k[i]) * t_omega[i];
    if (dot == 0) r.set_mode(k, c);
  }
  r.add_tail(P.tail_bound());
  return r;
}

AnalyticVectorField homological_solve(const AnalyticVectorField& P,
                                      const std::vector<ZZ>& t_omega, double T) {
  if (static_cast<int>(t_omega.size()) != P.dim())
    throw DomainError("period vector must have the field dimension");
  if (!(T > 0)) throw DomainError("period must be positive");
  AnalyticVectorField V(P.dim(), P.width(), P.mode_cap());
  for (const auto& [k, c] : P.modes()) {
    ZZ dot = 0;
    for (int i = 0; i < P.dim(); ++i) dot += ZZ(k[i]) * t_omega[i];
    if (dot == 0) continue;
    double m = dot.get_d();  // |k.t_omega| is far below 2^53 for stored modes
    ModeCoeff v(P.dim());
    std::complex<double> inv = 1.0 / std::complex<double>(0, kTwoPi * m);
    for (int i = 0; i < P.dim(); ++i) v[i] = T * c[i] * inv;
    V.set_mode(k, v);
  }
  // re-verify [V, X_omega] = P - [P] coefficient-wise: the k-th coefficient
  // of DV.omega is (2 pi i k.omega) V_k with omega = t_omega / T
  double scale = 0;
  for (const auto& [k, c] : P.modes()) scale = std::max(scale, coeff_inf(c));
  for (const auto& [k, v] : V.modes()) {
    ZZ dot = 0;
    for (int i = 0; i < P.dim(); ++i) dot += ZZ(k[i]) * t_omega[i];
    std::complex<double> factor(0, kTwoPi * dot.get_d() / T);
    const ModeCoeff& p = *P.mode(k);
    for (int i = 0; i < P.dim(); ++i)
      if (std::abs(factor * v[i] - p[i]) > 1e-14 * std::max(1.0, scale))
        throw Error("homological residual exceeds coefficient precision");
  }
  // V solves the stored modes exactly; unrepresented P-mass is not averaged
  // and stays attributed to the caller's remainder via pullback propagation
  return V;
}

AnalyticVectorField lie_bracket(const AnalyticVectorField& X, const AnalyticVectorField& V) {
  if (X.dim() != V.dim()) throw DomainError("vector field dimensions differ");
  const int n = X.dim();
  const double s = std::min(X.width(), V.width());
  const int cap = std::max(X.mode_cap(), V.mode_cap());
  AnalyticVectorField r(n, s, cap);

  std::map<ModeKey, ModeCoeff> acc;
  auto accumulate = [&](const ModeKey& a, const ModeCoeff& ca, const ModeKey& b,
                        const ModeCoeff& cb, double sign) {
    // sign * 2 pi i (c_a . b) c_b at mode a + b
    std::complex<double> dot = 0;
    for (int i = 0; i < n; ++i) dot += ca[i] * static_cast<double>(b[i]);
    if (dot == std::complex<double>(0, 0)) return;
    std::complex<double> f = std::complex<double>(0, sign * kTwoPi) * dot;
    ModeKey k(n);
    for (int i = 0; i < n; ++i) k[i] = a[i] + b[i];
    auto it = acc.try_emplace(k, ModeCoeff(n)).first;
    for (int i = 0; i < n; ++i) it->second[i] += f * cb[i];
  };
  for (const auto& [ka, ca] : X.modes())
    for (const auto& [kb, cb] : V.modes()) {
      accumulate(ka, ca, kb, cb, +1);  // (DV)X
      accumulate(kb, cb, ka, ca, -1);  // (DX)V
    }

  // the two accumulation orders at k and -k round differently; project a
  // real bracket back onto the exactly-conjugate-symmetric subspace
  if (X.real_valued() && V.real_valued()) {
    for (auto& [k, c] : acc) {
      ModeKey nk = negate(k);
      if (nk < k) continue;
      auto opp = acc.find(nk);
      if (opp == acc.end()) continue;
      for (int i = 0; i < n; ++i) {
        std::complex<double> m = (c[i] + std::conj(opp->second[i])) / 2.0;
        c[i] = m;
        opp->second[i] = std::conj(m);
      }
    }
  }

  double dropped = 0;
  for (const auto& [k, c] : acc) {
    if (all_zero(c)) continue;
    if (l1(k) > cap)
      dropped += coeff_inf(c) * std::exp(kTwoPi * s * l1(k));
    else
      r.set_mode(k, c);
  }
  // propagate input tails through the Cauchy estimate at half the width
  double nx = upper(majorant_norm(X, std::min(s, X.width())));
  double nv = upper(majorant_norm(V, std::min(s, V.width())));
  r.add_tail(dropped * 1.0000001 +
             (X.tail_bound() * nv + V.tail_bound() * nx) * 4.0 / s);

  // Cauchy estimate at sigma = s/2, valid for the majorant norm
  CReal lhs = majorant_norm(r, s / 2);
  CReal rhs = CReal::from_double(4.0 / s) * majorant_norm(X, s) * majorant_norm(V, s);
  if (!not_provably_greater(lhs, rhs))
    throw Error("bracket violates the Cauchy estimate at half width");
  return r;
}

AnalyticVectorField pullback(const AnalyticVectorField& V, double t,
                             const AnalyticVectorField& X, double target_width,
                             int max_order) {
  if (X.dim() != V.dim()) throw DomainError("vector field dimensions differ");
  const double s = std::min(X.width(), V.width());
  const double sigma = s - target_width;
  if (!(sigma > 0)) throw DomainError("pullback needs a positive width loss");
  if (!(std::abs(t) <= 1))
    throw ThresholdError("|t| <= 1", "pullback time exceeds the unit interval");
  CReal nv = majorant_norm(V, s);
  CReal bound = CReal::from_double(sigma) / (CReal::integer(4) * CReal::integer(1).exp());
  if (!not_provably_greater(nv, bound))
    throw ThresholdError("N_s(V) <= sigma / (4e)",
                         "pullback hypothesis violated: N_s(V) = " + fmt(upper(nv)) +
                             " exceeds sigma/(4e) = " + fmt(upper(bound)));

  CReal nx = majorant_norm(X, s);
  double nx_up = upper(nx);

  AnalyticVectorField sum(X.dim(), target_width, std::max(X.mode_cap(), V.mode_cap()));
  sum = sum + X;
  AnalyticVectorField term = X;  // X_m, with X_0 = X
  double factor = 1;             // t^m / m!
  int m = 0;
  double term_mass = nx_up;
  while (m < max_order && term_mass * std::abs(factor) > 1e-18 * (nx_up + 1)) {
    term = lie_bracket(V, term);  // X_{m+1} = (D X_m) V - (D V) X_m
    ++m;
    factor *= t / m;
    sum = sum + term.scaled(factor);
    term_mass = upper(majorant_norm(term, std::min(s, term.width())));
  }
  // geometric tail anchored at the last computed term: the term estimate
  // applied to X_m gives |X_{m+j}| |t|^{m+j} / (m+j)! <= (|X_m| |t|^m / m!) ratio^j
  // since t^{m+j}/(m+j)! <= (t^m/m!)(t^j/j!), with ratio <= |t|/2 under the
  // entry hypothesis
  double ratio = std::min(std::abs(t) / 2,
                          2 * std::exp(1.0) * std::abs(t) * upper(nv) / sigma * 1.0000001);
  double tail =
      (ratio > 0) ? term_mass * std::abs(factor) * ratio / (1 - ratio) : 0.0;
  AnalyticVectorField out(X.dim(), target_width, sum.mode_cap());
  for (const auto& [k, c] : sum.modes()) out.set_mode(k, c);
  out.add_tail(sum.tail_bound() + tail * 1.0000001 +
               V.tail_bound() * (4.0 / sigma) * nx_up);

  CReal res = majorant_norm(out, target_width);
  if (!not_provably_greater(res, CReal::integer(2) * nx +
                                     CReal::from_double(out.tail_bound())))
    throw Error("pullback norm exceeds twice the input norm");
  return out;
}

std::vector<double> flow_eval(const AnalyticVectorField& V, double t,
                              std::vector<double> theta) {
  if (!V.real_valued())
    throw DomainError("flow integration requires a real-valued field");
  if (static_cast<int>(theta.size()) != V.dim())
    throw DomainError("flow start point must have the field dimension");
  if (t == 0) return theta;

  auto rk4 = [&](std::vector<double> y, int steps) {
    const int n = V.dim();
    double h = t / steps;
    std::vector<double> k1, k2, k3, k4, tmp(n);
    for (int s = 0; s < steps; ++s) {
      k1 = V.eval_real(y);
      for (int i = 0; i < n; ++i) tmp[i] = y[i] + h / 2 * k1[i];
      k2 = V.eval_real(tmp);
      for (int i = 0; i < n; ++i) tmp[i] = y[i] + h / 2 * k2[i];
      k3 = V.eval_real(tmp);
      for (int i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
      k4 = V.eval_real(tmp);
      for (int i = 0; i < n; ++i) y[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    return y;
  };

  int steps = 16;
  std::vector<double> coarse = rk4(theta, steps);
  for (; steps <= (1 << 20); steps *= 2) {
    std::vector<double> fine = rk4(theta, steps * 2);
    double diff = 0;
    for (size_t i = 0; i < fine.size(); ++i)
      diff = std::max(diff, std::abs(fine[i] - coarse[i]));
    if (diff < 1e-12) {
      // displacement consistent with the majorant speed limit
      double disp = 0, speed = upper(majorant_norm(V, 0));
      for (size_t i = 0; i < fine.size(); ++i)
        disp = std::max(disp, std::abs(fine[i] - theta[i]));
      if (disp > speed * std::abs(t) * (1 + 1e-9) + 1e-12)
        throw Error("flow displacement exceeds the majorant speed bound");
      return fine;
    }
    coarse = fine;
  }
  throw BudgetError("flow integration did not reach tolerance 1e-12");
}

FlowJet flow_jet(const AnalyticVectorField& V, double t, const std::vector<double>& theta) {
  if (!V.real_valued())
    throw DomainError("flow integration requires a real-valued field");
  const int n = V.dim();
  if (static_cast<int>(theta.size()) != n)
    throw DomainError("flow start point must have the field dimension");

  // DV at a real point: (DV)_{ij} = sum_k 2 pi i k_j V^i_k e^{2 pi i k.theta}
  auto jac = [&](const std::vector<double>& y) {
    std::vector<std::vector<double>> J(n, std::vector<double>(n, 0.0));
    for (const auto& [k, c] : V.modes()) {
      double phase = 0;
      for (int i = 0; i < n; ++i) phase += k[i] * y[i];
      std::complex<double> f = std::polar(1.0, kTwoPi * phase) * std::complex<double>(0, kTwoPi);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) J[i][j] += (f * c[i]).real() * k[j];
    }
    return J;
  };

  struct State {
    std::vector<double> y;
    std::vector<std::vector<double>> J;
  };
  auto deriv = [&](const State& st) {
    State d;
    d.y = V.eval_real(st.y);
    auto DV = jac(st.y);
    d.J.assign(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) d.J[i][j] += DV[i][l] * st.J[l][j];
    return d;
  };
  auto axpy = [&](const State& a, double h, const State& b) {
    State r = a;
    for (int i = 0; i < n; ++i) {
      r.y[i] += h * b.y[i];
      for (int j = 0; j < n; ++j) r.J[i][j] += h * b.J[i][j];
    }
    return r;
  };
  auto rk4 = [&](State st, int steps) {
    double h = t / steps;
    for (int s = 0; s < steps; ++s) {
      State k1 = deriv(st);
      State k2 = deriv(axpy(st, h / 2, k1));
      State k3 = deriv(axpy(st, h / 2, k2));
      State k4 = deriv(axpy(st, h, k3));
      st = axpy(st, h / 6, k1);
      st = axpy(st, h / 3, k2);
      st = axpy(st, h / 3, k3);
      st = axpy(st, h / 6, k4);
    }
    return st;
  };

  State init;
  init.y = theta;
  init.J.assign(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) init.J[i][i] = 1.0;
  if (t == 0) return {init.y, init.J};

  State coarse = rk4(init, 16);
  for (int steps = 16; steps <= (1 << 20); steps *= 2) {
    State fine = rk4(init, steps * 2);
    double diff = 0;
    for (int i = 0; i < n; ++i) {
      diff = std::max(diff, std::abs(fine.y[i] - coarse.y[i]));
      for (int j = 0; j < n; ++j) diff = std::max(diff, std::abs(fine.J[i][j] - coarse.J[i][j]));
    }
    if (diff < 1e-12) return {fine.y, fine.J};
    coarse = fine;
  }
  throw BudgetError("flow integration did not reach tolerance 1e-12");
}

EmbeddingMap::EmbeddingMap(int dim, double codomain_width)
    : n_(dim), domain_(codomain_width), codomain_(codomain_width) {
  if (dim < 1) throw DomainError("embedding dimension must be positive");
  if (!(codomain_width > 0)) throw DomainError("embedding width must be positive");
}

void EmbeddingMap::append_stage(const AnalyticVectorField& V, double t, double margin) {
  if (V.dim() != n_) throw DomainError("stage dimension mismatch");
  if (!(margin > 0) || margin >= domain_)
    throw DomainError("stage margin must lie inside the current domain width");
  CReal nv = majorant_norm(V, std::min(domain_, V.width()));
  double displacement = upper(nv) * std::abs(t);
  if (!(displacement < margin))
    throw ThresholdError("|t| N(V) < margin",
                         "flow-existence margin exhausted: |t| N(V) = " + fmt(displacement) +
                             " versus margin " + fmt(margin));
  stages_.push_back({V, t, margin});
  domain_ -= margin;
  displacement_ = displacement_ + nv * CReal::from_double(std::abs(t));
}

void EmbeddingMap::extend(const EmbeddingMap& tail) {
  if (tail.n_ != n_) throw DomainError("embedding dimension mismatch");
  for (const auto& st : tail.stages_) append_stage(st.V, st.t, st.margin);
}

std::vector<double> EmbeddingMap::eval(const std::vector<double>& theta) const {
  std::vector<double> y = theta;
  for (auto it = stages_.rbegin(); it != stages_.rend(); ++it)
    y = flow_eval(it->V, it->t, y);
  return y;
}

FlowJet EmbeddingMap::eval_jet(const std::vector<double>& theta) const {
  FlowJet out;
  out.point = theta;
  out.jacobian.assign(n_, std::vector<double>(n_, 0.0));
  for (int i = 0; i < n_; ++i) out.jacobian[i][i] = 1.0;
  // Phi = A o B:  DPhi(x) = DA(B(x)) DB(x); stages apply back to front
  for (auto it = stages_.rbegin(); it != stages_.rend(); ++it) {
    FlowJet stage = flow_jet(it->V, it->t, out.point);
    out.point = stage.point;
    std::vector<std::vector<double>> prod(n_, std::vector<double>(n_, 0.0));
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int l = 0; l < n_; ++l) prod[i][j] += stage.jacobian[i][l] * out.jacobian[l][j];
    out.jacobian = std::move(prod);
  }
  return out;
}

AveragingResult averaging_step(const AveragingInput& Y, double s, double sigma, double b) {
  const int n = Y.P.dim();
  if (Y.S.dim() != n || static_cast<int>(Y.varpi.size()) != n ||
      static_cast<int>(Y.t_omega.size()) != n)
    throw DomainError("averaging input pieces must share one dimension");
  if (!(sigma > 0) || !(sigma < s)) throw DomainError("need 0 < sigma < s");
  if (!(b > 0) || !(b < 1)) throw DomainError("need 0 < b < 1");
  if (Y.P.width() < s || Y.S.width() < s)
    throw DomainError("input fields are narrower than the requested width");
  if (!(Y.T > 0)) throw DomainError("period must be positive");

  CReal eps = majorant_norm(Y.P, s) + CReal::from_double(Y.P.tail_bound());
  CReal delta = majorant_norm(Y.S, s) + CReal::from_double(Y.S.tail_bound());
  CReal mu = CReal::integer(2) * eps;
  mu = CReal::max(mu, eps + delta);
  for (double w : Y.varpi) mu = CReal::max(mu, CReal::from_double(std::abs(w)));

  // (thr): 2 eps <= mu and eps + delta <= mu hold by construction; the
  // binding constraint is 2^4 T mu / sigma <= b
  CReal lhs = CReal::integer(16) * CReal::from_double(Y.T) * mu;
  CReal rhs = CReal::from_double(b) * CReal::from_double(sigma);
  bool ok;
  try {
    ok = certified_le(lhs, rhs);
  } catch (const UndecidableError&) {
    ok = false;
  }
  if (!ok)
    throw ThresholdError("2^4 T mu <= b sigma",
                         "averaging threshold fails: 16 T mu = " + fmt(upper(lhs)) +
                             " > b sigma = " + fmt(upper(rhs)));

  AveragingResult out{homological_solve(Y.P, Y.t_omega, Y.T),
                      periodic_average(Y.P, Y.t_omega),
                      AnalyticVectorField(n, s - sigma),
                      upper(eps),
                      upper(delta),
                      upper(mu)};

  // the resonant projection of the stored modes is exact; hidden P-mass is
  // accounted once, in the remainder, through the pullback tail propagation
  {
    AnalyticVectorField avg(n, out.average.width(), out.average.mode_cap());
    for (const auto& [k, c] : out.average.modes()) avg.set_mode(k, c);
    out.average = avg;
  }

  // |V|_s <= T eps, |[P]|_s <= eps
  CReal t_eps = CReal::from_double(Y.T) * eps;
  if (!not_provably_greater(majorant_norm(out.V, s), t_eps))
    throw Error("homological solution exceeds T eps");
  if (!not_provably_greater(majorant_norm(out.average, s), eps))
    throw Error("resonant average exceeds eps");

  // |V^1 - Id| <= T eps at sample points
  if (out.V.real_valued()) {
    double cap = upper(t_eps) * (1 + 1e-9) + 1e-12;
    for (int j = 0; j < 8; ++j) {
      std::vector<double> theta(n);
      for (int i = 0; i < n; ++i) theta[i] = 0.13 * (j + 1) + 0.41 * i;
      std::vector<double> image = flow_eval(out.V, 1.0, theta);
      for (int i = 0; i < n; ++i)
        if (std::abs(image[i] - theta[i]) > cap)
          throw Error("time-one flow strays beyond T eps");
    }
  }

  std::vector<double> omega(n);
  for (int i = 0; i < n; ++i) omega[i] = Y.t_omega[i].get_d() / Y.T;
  AnalyticVectorField x_omega = AnalyticVectorField::constant(omega, s);
  AnalyticVectorField x_varpi = AnalyticVectorField::constant(Y.varpi, s);

  const double w = s - sigma;
  AnalyticVectorField pulled = pullback(out.V, 1.0, x_omega, w);
  pulled = pulled + pullback(out.V, 1.0, x_varpi, w);
  pulled = pulled + pullback(out.V, 1.0, Y.S, w);
  pulled = pulled + pullback(out.V, 1.0, Y.P, w);
  out.remainder = pulled - (x_omega + x_varpi + Y.S + out.average);

  // the new perturbation obeys |Ptilde|_{s-sigma} <= b eps, up to the
  // truncation tails and a rounding pad
  CReal residual = majorant_norm(out.remainder, w);
  CReal allowance = CReal::from_double(b) * eps +
                    CReal::from_double(out.remainder.tail_bound()) +
                    CReal::from_double(1e-11 * (out.epsilon + 1));
  if (!not_provably_greater(residual, allowance))
    throw Error("averaging remainder exceeds b eps");
  return out;
}

}  // namespace dpa
