#include "dpa/minima.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dpa/error.hpp"

namespace dpa {

namespace {

// ---- small double-interval arithmetic for enumeration prefilters --------
struct DIv {
  double lo, hi;
};
inline DIv dpoint(double v) { return {v, v}; }
inline DIv dadd(DIv a, DIv b) { return {a.lo + b.lo, a.hi + b.hi}; }
inline DIv dsub(DIv a, DIv b) { return {a.lo - b.hi, a.hi - b.lo}; }
inline DIv dmul(DIv a, DIv b) {
  double v[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return {std::min(std::min(v[0], v[1]), std::min(v[2], v[3])),
          std::max(std::max(v[0], v[1]), std::max(v[2], v[3]))};
}
inline DIv dabs(DIv a) {
  if (a.lo >= 0) return a;
  if (a.hi <= 0) return {-a.hi, -a.lo};
  return {0, std::max(-a.lo, a.hi)};
}
inline DIv dmax(DIv a, DIv b) { return {std::max(a.lo, b.lo), std::max(a.hi, b.hi)}; }
// b must not contain 0
inline DIv ddiv(DIv a, DIv b) {
  double v[4] = {a.lo / b.lo, a.lo / b.hi, a.hi / b.lo, a.hi / b.hi};
  return {std::min(std::min(v[0], v[1]), std::min(v[2], v[3])),
          std::max(std::max(v[0], v[1]), std::max(v[2], v[3]))};
}
// widen enough to cover accumulated double rounding (plain arithmetic here
// is not directed); anything inside the pad goes to the certified check
inline double pad_lo(double v) { return v - (std::fabs(v) * 1e-9 + 1e-300); }
inline double pad_hi(double v) { return v + (std::fabs(v) * 1e-9 + 1e-300); }

long zz_to_long(const ZZ& z) {
  if (!z.fits_slong_p()) throw BudgetError("height does not fit in a machine word");
  return mpz_get_si(z.get_mpz_t());
}

// ---- canonical ordering ---------------------------------------------------
bool sign_normalize(std::vector<ZZ>& x) {  // returns false for the zero vector
  for (const auto& c : x) {
    if (c > 0) return true;
    if (c < 0) {
      for (auto& t : x) t = -t;
      return true;
    }
  }
  return false;
}

ZZ height_of(const std::vector<ZZ>& x) {
  ZZ h(0);
  for (const auto& c : x) {
    ZZ a = ZZ(::abs(c));
    if (a > h) h = a;
  }
  return h;
}

bool lex_less(const std::vector<ZZ>& a, const std::vector<ZZ>& b) {
  for (size_t i = 0; i < a.size(); ++i) {
    int c = cmp(a[i], b[i]);
    if (c != 0) return c < 0;
  }
  return false;
}

// ---- exact rank tracking over Q -------------------------------------------
struct RankTracker {
  std::vector<std::vector<QQ>> rows;  // echelon rows
  std::vector<int> pivots;

  std::vector<QQ> reduce(const std::vector<ZZ>& x) const {
    std::vector<QQ> v(x.size());
    for (size_t i = 0; i < x.size(); ++i) v[i] = QQ(x[i]);
    for (size_t r = 0; r < rows.size(); ++r) {
      int p = pivots[r];
      if (v[p] == 0) continue;
      QQ f = v[p] / rows[r][p];
      for (size_t j = p; j < v.size(); ++j) v[j] -= f * rows[r][j];
    }
    return v;
  }
  bool add(const std::vector<ZZ>& x) {
    auto v = reduce(x);
    for (size_t j = 0; j < v.size(); ++j)
      if (v[j] != 0) {
        rows.push_back(v);
        pivots.push_back((int)j);
        return true;
      }
    return false;
  }
  int rank() const { return (int)rows.size(); }
};

// all sign-normalized x in Z^n with |x|_inf == h exactly
void surface_points_std(int n, long h,
                        const std::function<void(const std::vector<ZZ>&)>& emit) {
  std::vector<long> x(n);
  std::vector<ZZ> out(n);
  std::function<void(int, bool)> rec = [&](int pos, bool pinned) {
    if (pos == n) {
      if (!pinned) return;
      bool seen = false;
      for (int i = 0; i < n; ++i) {
        if (!seen && x[i] != 0) {
          if (x[i] < 0) return;  // keep one representative of each +/- pair
          seen = true;
        }
        out[i] = x[i];
      }
      if (seen) emit(out);
      return;
    }
    if (!pinned && pos == n - 1) {
      x[pos] = -h;
      rec(pos + 1, true);
      x[pos] = h;
      rec(pos + 1, true);
      return;
    }
    for (long v = -h; v <= h; ++v) {
      x[pos] = v;
      rec(pos + 1, pinned || v == -h || v == h);
    }
  };
  rec(0, false);
}

// integers in [w.lo, w.hi] (padded outward) ∩ [clip_lo, clip_hi]
std::vector<long> window_ints(DIv w, long clip_lo, long clip_hi) {
  double lo = pad_lo(w.lo), hi = pad_hi(w.hi);
  if (lo < (double)clip_lo) lo = (double)clip_lo;
  if (hi > (double)clip_hi) hi = (double)clip_hi;
  std::vector<long> out;
  if (lo > hi) return out;
  double a = std::ceil(lo), b = std::floor(hi);
  if (b - a > 4e6) throw BudgetError("defect window too wide");
  for (double v = a; v <= b; ++v) out.push_back((long)v);
  return out;
}

bool window_contains(DIv w, double v) { return v >= pad_lo(w.lo) && v <= pad_hi(w.hi); }

// odometer over the box prod_i [lo_i, hi_i]
void for_box(const std::vector<long>& lo, const std::vector<long>& hi,
             const std::function<void(const std::vector<long>&)>& f) {
  int m = (int)lo.size();
  std::vector<long> x(m);
  std::function<void(int)> rec = [&](int pos) {
    if (pos == m) {
      f(x);
      return;
    }
    for (long v = lo[pos]; v <= hi[pos]; ++v) {
      x[pos] = v;
      rec(pos + 1);
    }
  };
  rec(0);
}

// all points of the m-dimensional box surface |x|_inf = h (no sign dedupe)
void for_surface_all(int m, long h, const std::function<void(const std::vector<long>&)>& f) {
  std::vector<long> x(m);
  std::function<void(int, bool)> rec = [&](int pos, bool pinned) {
    if (pos == m) {
      if (pinned) f(x);
      return;
    }
    if (!pinned && pos == m - 1) {
      x[pos] = -h;
      rec(pos + 1, true);
      x[pos] = h;
      rec(pos + 1, true);
      return;
    }
    for (long v = -h; v <= h; ++v) {
      x[pos] = v;
      rec(pos + 1, pinned || v == -h || v == h);
    }
  };
  rec(0, false);
}

}  // namespace

CReal eta_defect(const FrequencyVector& fv, const std::vector<ZZ>& x) {
  CReal m;  // n == 1: no constraint, defect 0
  for (int j = 1; j < fv.n; ++j) {
    CReal t = (CReal::integer(x[0]) * fv.alpha[j] - fv.alpha[0] * CReal::integer(x[j])).abs();
    m = (j == 1) ? t : CReal::max(m, t);
  }
  return m;
}

CReal eta_prime_defect(const FrequencyVector& fv, const std::vector<ZZ>& x) {
  return fv.dot(x).abs();
}

namespace {

DIv eta_defect_d(const FrequencyVector& fv, const std::vector<ZZ>& x) {
  DIv m = dpoint(0);
  double x0 = mpz_get_d(x[0].get_mpz_t());
  for (int j = 1; j < fv.n; ++j) {
    DIv t = dabs(dsub(dmul(dpoint(x0), {fv.lo_d[j], fv.hi_d[j]}),
                      dmul({fv.lo_d[0], fv.hi_d[0]}, dpoint(mpz_get_d(x[j].get_mpz_t())))));
    m = (j == 1) ? t : dmax(m, t);
  }
  return m;
}

DIv eta_prime_defect_d(const FrequencyVector& fv, const std::vector<ZZ>& x) {
  DIv s = dpoint(0);
  for (int j = 0; j < fv.n; ++j)
    s = dadd(s, dmul(dpoint(mpz_get_d(x[j].get_mpz_t())), {fv.lo_d[j], fv.hi_d[j]}));
  return dabs(s);
}

}  // namespace

// ---------------------------------------------------------------------------
// FamilyScanner: incremental height scan maintaining the greedy min-max-defect
// family of rank k.  Snapshots record every strict improvement; between
// snapshot heights the minimal family is unchanged.  Threshold pruning is
// sound because the greedy value v_k never increases and every member of a
// later optimal family has defect <= v_k, so a point provably above the
// current v_k can never re-enter.
// ---------------------------------------------------------------------------
class FamilyScanner {
 public:
  struct Snapshot {
    ZZ height;
    CReal value;
    std::vector<std::vector<ZZ>> chain;
  };

  FamilyScanner(const MinimaEngine& eng, int k, FamilyMode mode)
      : eng_(eng), k_(k), mode_(mode) {}

  void advance_to_height(const ZZ& H, long budget) {
    std::lock_guard<std::mutex> lk(mu_);
    advance_locked(H, budget);
  }

  // scan until the greedy value satisfies value <= thr (thr > 0); returns the
  // first snapshot achieving it, i.e. the least admissible height
  Snapshot advance_until_value_le(const CReal& thr, long budget) {
    std::lock_guard<std::mutex> lk(mu_);
    while (true) {
      for (const auto& s : snaps_)
        if (certified_compare(s.value, thr) != Cmp::GT) return s;
      if (done_) throw Error("defect floor reached above the requested threshold");
      advance_locked(scanned_ + 1, budget);
    }
  }

  std::vector<Snapshot> snapshots_upto(const ZZ& H, long budget) {
    std::lock_guard<std::mutex> lk(mu_);
    advance_locked(H, budget);
    std::vector<Snapshot> out;
    for (const auto& s : snaps_)
      if (s.height <= H) out.push_back(s);
    return out;
  }

  ZZ scanned_height() {
    std::lock_guard<std::mutex> lk(mu_);
    return scanned_;
  }

 private:
  const MinimaEngine& eng_;
  int k_;
  FamilyMode mode_;
  std::mutex mu_;

  struct P {
    std::vector<ZZ> x;
    ZZ h;
    CReal defect;
    double dlo, dhi;
  };
  std::vector<P> buffer_;
  std::vector<Snapshot> snaps_;
  ZZ scanned_{0};
  bool done_ = false;  // defect hit exact zero: no further change possible
  double vhi_ = -1;    // upper double bound of the current threshold

  DIv defect_d(const std::vector<ZZ>& x) const {
    return mode_ == FamilyMode::ETA ? eta_defect_d(eng_.fv_, x)
                                    : eta_prime_defect_d(eng_.fv_, x);
  }
  CReal defect_c(const std::vector<ZZ>& x) const {
    return mode_ == FamilyMode::ETA ? eta_defect(eng_.fv_, x)
                                    : eta_prime_defect(eng_.fv_, x);
  }

  bool have_threshold() const { return !snaps_.empty(); }

  void consider(const std::vector<ZZ>& x) {
    DIv d = defect_d(x);
    if (have_threshold() && pad_lo(d.lo) > pad_hi(vhi_)) return;  // certainly worse
    P p{x, height_of(x), defect_c(x), d.lo, d.hi};
    if (have_threshold()) {
      Cmp c;
      try {
        c = certified_compare(p.defect, snaps_.back().value);
      } catch (const UndecidableError&) {
        c = Cmp::EQ;  // keep; never unsound, only costs memory
      }
      if (c == Cmp::GT) return;
    }
    buffer_.push_back(std::move(p));
  }

  bool defect_less(const P& a, const P& b) const {
    if (pad_hi(a.dhi) < pad_lo(b.dlo)) return true;
    if (pad_hi(b.dhi) < pad_lo(a.dlo)) return false;
    Cmp c = certified_compare(a.defect, b.defect);
    if (c != Cmp::EQ) return c == Cmp::LT;
    int hc = cmp(a.h, b.h);
    if (hc != 0) return hc < 0;
    return lex_less(a.x, b.x);
  }

  void regreedy(const ZZ& h) {
    std::vector<int> idx(buffer_.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = (int)i;
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return defect_less(buffer_[a], buffer_[b]); });
    RankTracker rt;
    std::vector<int> chain;
    for (int i : idx) {
      if (rt.add(buffer_[i].x)) {
        chain.push_back(i);
        if ((int)chain.size() == k_) break;
      }
    }
    if ((int)chain.size() < k_) return;
    const P& worst = buffer_[chain.back()];
    if (!snaps_.empty() && certified_compare(worst.defect, snaps_.back().value) != Cmp::LT)
      return;
    Snapshot s;
    s.height = h;
    s.value = worst.defect;
    for (int i : chain) s.chain.push_back(buffer_[i].x);
    snaps_.push_back(std::move(s));
    vhi_ = snaps_.back().value.to_double_bounds().second;
    if (certified_sign(snaps_.back().value) == 0) done_ = true;
    std::vector<P> kept;
    for (auto& p : buffer_) {
      bool drop;
      if (pad_lo(p.dlo) > pad_hi(vhi_)) {
        drop = true;
      } else {
        try {
          drop = certified_compare(p.defect, snaps_.back().value) == Cmp::GT;
        } catch (const UndecidableError&) {
          drop = false;
        }
      }
      if (!drop) kept.push_back(std::move(p));
    }
    buffer_ = std::move(kept);
  }

  // ---- windowed candidate generation (standard lattice, threshold known) --
  // Every height-h point whose defect is not provably above the threshold
  // lies in the emitted set; missing points are certainly above it and thus
  // covered by the pruning argument.  Return false to request a full scan.

  // a trailing coordinate with |alpha_j| bounded away from 0
  int solve_index() const {
    const auto& fv = eng_.fv_;
    int best = -1;
    double bestv = 0;
    for (int j = 1; j < fv.n; ++j) {
      DIv a = dabs(DIv{fv.lo_d[j], fv.hi_d[j]});
      if (a.lo <= 0) continue;
      if (a.lo > bestv) {
        bestv = a.lo;
        best = j;
      }
    }
    return best;
  }

  void push_candidate(std::vector<ZZ> x, long h, std::set<std::vector<ZZ>>& out) const {
    if (height_of(x) != h) return;
    if (!sign_normalize(x)) return;
    out.insert(std::move(x));
  }

  // |sum_j x_j a_j| <= T on the height-h surface
  bool window_candidates_eta_prime(long h, std::set<std::vector<ZZ>>& out) const {
    const auto& fv = eng_.fv_;
    int n = fv.n;
    DIv a0{fv.lo_d[0], fv.hi_d[0]};
    if (a0.lo <= 0) return false;
    DIv TT{-pad_hi(vhi_), pad_hi(vhi_)};
    if (n == 1) {
      if (window_contains(ddiv(TT, a0), (double)h)) push_candidate({ZZ(h)}, h, out);
      return true;
    }
    // case A: some trailing coordinate hits ±h; solve for x0
    for_surface_all(n - 1, h, [&](const std::vector<long>& tr) {
      DIv s = dpoint(0);
      for (int j = 1; j < n; ++j)
        s = dadd(s, dmul(dpoint((double)tr[j - 1]), {fv.lo_d[j], fv.hi_d[j]}));
      for (long x0 : window_ints(ddiv(dsub(TT, s), a0), -h, h)) {
        std::vector<ZZ> x(n);
        x[0] = x0;
        for (int j = 1; j < n; ++j) x[j] = tr[j - 1];
        push_candidate(std::move(x), h, out);
      }
    });
    // case B: x0 = ±h, trailing strictly inside; solve for coordinate js
    int js = solve_index();
    if (js < 0) {
      // every trailing coefficient may vanish; bound the case-B defect from
      // below and fall back to a full scan unless it provably exceeds T
      double S = 0;
      for (int j = 1; j < n; ++j) S += std::max(std::fabs(fv.lo_d[j]), std::fabs(fv.hi_d[j]));
      double min_defect = (double)h * a0.lo - (double)(h - 1) * S;
      return pad_lo(min_defect) > pad_hi(vhi_);
    }
    DIv ajs{fv.lo_d[js], fv.hi_d[js]};
    std::vector<long> lo(n - 2, -(h - 1)), hi(n - 2, h - 1);
    for_box(lo, hi, [&](const std::vector<long>& rest) {
      for (long s0 : {h, -h}) {
        DIv s = dmul(dpoint((double)s0), a0);
        int t = 0;
        for (int j = 1; j < n; ++j) {
          if (j == js) continue;
          s = dadd(s, dmul(dpoint((double)rest[t++]), {fv.lo_d[j], fv.hi_d[j]}));
        }
        for (long v : window_ints(ddiv(dsub(TT, s), ajs), -(h - 1), h - 1)) {
          std::vector<ZZ> x(n);
          x[0] = s0;
          int u = 0;
          for (int j = 1; j < n; ++j) x[j] = (j == js) ? ZZ(v) : ZZ(rest[u++]);
          push_candidate(std::move(x), h, out);
        }
      }
    });
    return true;
  }

  // max_j |x0 a_j - a0 x_j| <= T on the height-h surface
  bool window_candidates_eta(long h, std::set<std::vector<ZZ>>& out) const {
    const auto& fv = eng_.fv_;
    int n = fv.n;
    DIv a0{fv.lo_d[0], fv.hi_d[0]};
    if (a0.lo <= 0) return false;
    if (n == 1) return true;  // no constraint beyond |x0| = h, defect 0 < any T
    DIv TT{-pad_hi(vhi_), pad_hi(vhi_)};
    auto coord_window = [&](long x0, int j) {
      return ddiv(dadd(dmul(dpoint((double)x0), {fv.lo_d[j], fv.hi_d[j]}), TT), a0);
    };
    auto product_emit = [&](long x0, int pinned_j, long pinned_v) {
      std::vector<std::vector<long>> lists(n);
      lists[0] = {x0};
      for (int j = 1; j < n; ++j) {
        if (j == pinned_j) {
          lists[j] = {pinned_v};
          continue;
        }
        lists[j] = window_ints(coord_window(x0, j), -h, h);
        if (lists[j].empty()) return;
      }
      std::vector<ZZ> x(n);
      x[0] = x0;
      std::function<void(int)> rec = [&](int pos) {
        if (pos == n) {
          push_candidate(x, h, out);
          return;
        }
        for (long v : lists[pos]) {
          x[pos] = v;
          rec(pos + 1);
        }
      };
      rec(1);
    };
    if (n == 2) {
      // O(1) per height: invert the single constraint both ways
      DIv a1{fv.lo_d[1], fv.hi_d[1]};
      for (long x0 : {h, -h})
        for (long x1 : window_ints(coord_window(x0, 1), -h, h))
          push_candidate({ZZ(x0), ZZ(x1)}, h, out);
      if (a1.lo > 0 || a1.hi < 0) {
        // x1 = ±h: x0 in (a0 x1 + [-T, T]) / a1
        for (long x1 : {h, -h})
          for (long x0 : window_ints(ddiv(dadd(dmul(dpoint((double)x1), a0), TT), a1),
                                     -(h - 1), h - 1))
            push_candidate({ZZ(x0), ZZ(x1)}, h, out);
        return true;
      }
      // a1 may vanish: the x1 = ±h constraint cannot be inverted
      return false;
    }
    // general n: iterate x0, pin the coordinate that must reach ±h
    for (long x0 = 0; x0 <= h; ++x0) {
      if (x0 == h) {
        product_emit(x0, -1, 0);
        continue;
      }
      for (int js = 1; js < n; ++js) {
        DIv w = coord_window(x0, js);
        if (window_contains(w, (double)h)) product_emit(x0, js, h);
        if (window_contains(w, (double)-h)) product_emit(x0, js, -h);
      }
    }
    return true;
  }

  void advance_locked(const ZZ& H, long budget) {
    while (scanned_ < H && !done_) {
      ZZ next = scanned_ + 1;
      if (next > budget)
        throw BudgetError("enumeration budget exceeded at height " + next.get_str());
      if (eng_.is_standard_) {
        long h = zz_to_long(next);
        bool windowed = false;
        if (have_threshold()) {
          std::set<std::vector<ZZ>> cand;
          windowed = (mode_ == FamilyMode::ETA) ? window_candidates_eta(h, cand)
                                                : window_candidates_eta_prime(h, cand);
          if (windowed)
            for (const auto& x : cand) consider(x);
        }
        if (!windowed)
          surface_points_std(eng_.fv_.n, h, [&](const std::vector<ZZ>& x) { consider(x); });
        regreedy(next);
        scanned_ = next;
      } else {
        // sublattice: scan coordinate boxes in geometric chunks
        ZZ target = scanned_ * 2;
        if (target < scanned_ + 4) target = scanned_ + 4;
        if (target > H) target = H;
        if (target > budget) target = budget;
        if (target <= scanned_) target = next;
        std::vector<P> batch;
        eng_.box_points(scanned_, target, [&](const std::vector<ZZ>& x, const ZZ&) {
          DIv d = defect_d(x);
          if (have_threshold() && pad_lo(d.lo) > pad_hi(vhi_)) return;
          batch.push_back(P{x, height_of(x), defect_c(x), d.lo, d.hi});
        });
        std::sort(batch.begin(), batch.end(), [](const P& a, const P& b) {
          int c = cmp(a.h, b.h);
          if (c != 0) return c < 0;
          return lex_less(a.x, b.x);
        });
        size_t i = 0;
        while (i < batch.size()) {
          size_t j = i;
          while (j < batch.size() && batch[j].h == batch[i].h) ++j;
          for (size_t t = i; t < j; ++t) {
            if (have_threshold()) {
              Cmp c;
              try {
                c = certified_compare(batch[t].defect, snaps_.back().value);
              } catch (const UndecidableError&) {
                c = Cmp::EQ;
              }
              if (c == Cmp::GT) continue;
            }
            buffer_.push_back(batch[t]);
          }
          regreedy(batch[i].h);
          i = j;
        }
        scanned_ = target;
      }
    }
  }

  friend class MinimaEngine;
};

// ---------------------------------------------------------------------------

MinimaEngine::MinimaEngine(FrequencyVector fv, LatticeBasis L)
    : fv_(std::move(fv)), L_(std::move(L)) {
  if (L_.n != fv_.n) throw DomainError("lattice and frequency dimension mismatch");
  is_standard_ = (L_.d == L_.n);
  if (is_standard_) {
    for (int i = 0; i < L_.d && is_standard_; ++i)
      for (int j = 0; j < L_.n && is_standard_; ++j)
        if (L_.basis[i][j] != (i == j ? 1 : 0)) is_standard_ = false;
  }
  if (!is_standard_) {
    // |c_i| <= |x|_inf * sum_t |pinv[t][i]| with pinv = B^T (B B^T)^{-1}
    int d = L_.d, n = L_.n;
    std::vector<std::vector<QQ>> G(d, std::vector<QQ>(d));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        QQ s(0);
        for (int t = 0; t < n; ++t) s += L_.basis[i][t] * L_.basis[j][t];
        G[i][j] = s;
      }
    coord_bound_.assign(d, QQ(0));
    for (int i = 0; i < d; ++i) {
      std::vector<std::vector<QQ>> M = G;
      std::vector<QQ> e(d, QQ(0));
      e[i] = 1;
      for (int c = 0; c < d; ++c) {
        int p = -1;
        for (int r = c; r < d; ++r)
          if (M[r][c] != 0) {
            p = r;
            break;
          }
        if (p < 0) throw DomainError("degenerate lattice");
        std::swap(M[c], M[p]);
        std::swap(e[c], e[p]);
        QQ inv = M[c][c];
        for (int j = c; j < d; ++j) M[c][j] /= inv;
        e[c] /= inv;
        for (int r = 0; r < d; ++r) {
          if (r == c || M[r][c] == 0) continue;
          QQ f = M[r][c];
          for (int j = c; j < d; ++j) M[r][j] -= f * M[c][j];
          e[r] -= f * e[c];
        }
      }
      for (int t = 0; t < n; ++t) {
        QQ s(0);
        for (int j = 0; j < d; ++j) s += L_.basis[j][t] * e[j];
        coord_bound_[i] += ::abs(s);
      }
    }
  }
}

MinimaEngine::~MinimaEngine() = default;

void MinimaEngine::box_points(const ZZ& s, const ZZ& t,
                              const std::function<void(const std::vector<ZZ>&, const ZZ&)>& f)
    const {
  int d = L_.d, n = L_.n;
  std::vector<long> lo(d), hi(d);
  for (int i = 0; i < d; ++i) {
    QQ b = (is_standard_ ? QQ(1) : coord_bound_[i]) * QQ(t);
    ZZ c;
    mpz_cdiv_q(c.get_mpz_t(), b.get_num_mpz_t(), b.get_den_mpz_t());
    hi[i] = zz_to_long(c);
    lo[i] = -hi[i];
  }
  std::vector<ZZ> x(n);
  for_box(lo, hi, [&](const std::vector<long>& c) {
    for (int j = 0; j < n; ++j) {
      QQ v(0);
      for (int i = 0; i < d; ++i) v += L_.basis[i][j] * QQ(c[i]);
      v.canonicalize();
      if (v.get_den() != 1) throw Error("non-integral primal lattice point");
      x[j] = v.get_num();
    }
    ZZ h = height_of(x);
    if (h <= s || h > t) return;
    std::vector<ZZ> y = x;
    if (!sign_normalize(y)) return;
    if (y != x) return;  // emit each +/- pair once
    f(x, h);
  });
}

FamilyScanner& MinimaEngine::scanner(int k, FamilyMode mode) const {
  std::lock_guard<std::mutex> lk(mu_);
  auto key = std::make_pair(k, (int)mode);
  auto it = scanners_.find(key);
  if (it == scanners_.end())
    it = scanners_.emplace(key, std::make_unique<FamilyScanner>(*this, k, mode)).first;
  return *it->second;
}

static void check_k(int k, int d) {
  if (k < 1 || k > d) throw DomainError("k must be between 1 and d");
}

PsiResult MinimaEngine::psi(int k, const CReal& Q, long budget) const {
  check_k(k, L_.d);
  if (certified_compare(Q, CReal::integer(1)) == Cmp::LT)
    throw DomainError("psi requires Q >= 1");
  CReal thr = CReal::integer(1) / Q;
  auto [tlo, thi] = thr.to_double_bounds();
  DIv a0{fv_.lo_d[0], fv_.hi_d[0]};
  int n = fv_.n;

  struct Cand {
    std::vector<ZZ> x;
    ZZ h;
  };
  std::vector<Cand> pts;
  ZZ best(-1);  // current greedy k-th height; -1 = rank not reached yet

  auto regreedy = [&]() -> std::vector<int> {
    std::vector<int> idx(pts.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = (int)i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      int c = cmp(pts[a].h, pts[b].h);
      if (c != 0) return c < 0;
      return lex_less(pts[a].x, pts[b].x);
    });
    RankTracker rt;
    std::vector<int> chain;
    for (int i : idx) {
      if (rt.add(pts[i].x)) {
        chain.push_back(i);
        if ((int)chain.size() == k) break;
      }
    }
    if ((int)chain.size() == k) best = pts[chain.back()].h;
    return chain;
  };

  auto coord_ok = [&](long x0, int j, long xj) {
    CReal v = (CReal::integer(x0) * fv_.alpha[j] - fv_.alpha[0] * CReal::integer(xj)).abs();
    return certified_compare(v, thr) != Cmp::GT;
  };

  std::vector<int> final_chain;
  for (long x0 = 0;; ++x0) {
    if (best >= 0 && ZZ(x0) > best) break;
    if (x0 > budget) throw BudgetError("psi enumeration budget exceeded");
    std::vector<std::vector<long>> choices(n);
    choices[0] = {x0};
    bool empty = false;
    for (int j = 1; j < n && !empty; ++j) {
      DIv aj{fv_.lo_d[j], fv_.hi_d[j]};
      // |x0 aj - a0 xj| <= thr: xj in (x0 aj + [-thr, thr]) / a0
      DIv w = ddiv(dadd(dmul(dpoint((double)x0), aj), DIv{-thi, thi}), a0);
      long clip = budget;
      if (best >= 0) clip = std::min(clip, zz_to_long(best));
      std::vector<long> ok;
      for (long v : window_ints(w, -clip, clip)) {
        DIv dj = dabs(dsub(dmul(dpoint((double)x0), aj), dmul(a0, dpoint((double)v))));
        if (pad_lo(dj.lo) > pad_hi(thi)) continue;
        if (pad_hi(dj.hi) < pad_lo(tlo) || coord_ok(x0, j, v)) ok.push_back(v);
      }
      if (ok.empty()) empty = true;
      choices[j] = std::move(ok);
    }
    if (empty) continue;
    std::vector<ZZ> x(n);
    x[0] = x0;
    bool added = false;
    std::function<void(int)> rec = [&](int pos) {
      if (pos == n) {
        std::vector<ZZ> y = x;
        if (!sign_normalize(y)) return;  // zero vector
        if (x0 == 0 && y != x) return;   // emit each +/- pair once when x0 = 0
        if (!is_standard_ && !lattice_member(L_, y)) return;
        pts.push_back(Cand{y, height_of(y)});
        added = true;
        return;
      }
      for (long v : choices[pos]) {
        x[pos] = v;
        rec(pos + 1);
      }
    };
    rec(1);
    if (added && (int)pts.size() >= k) final_chain = regreedy();
  }
  if (best < 0) throw BudgetError("psi enumeration budget exceeded");
  PsiResult r;
  r.value = best;
  for (int i : final_chain) r.witnesses.push_back(pts[i].x);
  for (size_t i = 0; i < r.witnesses.size(); ++i) {
    CReal dfc = eta_defect(fv_, r.witnesses[i]);
    r.defect = (i == 0) ? dfc : CReal::max(r.defect, dfc);
  }
  return r;
}

PsiPrimeResult MinimaEngine::psi_prime(int k, const CReal& Q, long budget) const {
  check_k(k, L_.d);
  ZZ H = certified_floor(Q);
  auto& sc = scanner(k, FamilyMode::ETA_PRIME);
  auto snaps = sc.snapshots_upto(H, budget);
  if (snaps.empty()) throw DomainError("psi_prime requires Q >= C'_k");
  const auto& s = snaps.back();
  PsiPrimeResult r;
  r.defect = s.value;
  r.value = CReal::integer(1) / s.value;
  r.height = s.height;
  r.witnesses = s.chain;
  return r;
}

ZZ MinimaEngine::c_prime(int k, long budget) const {
  check_k(k, L_.d);
  if (is_standard_) return ZZ(1);
  RankTracker rt;
  ZZ h(0);
  while (true) {
    ZZ next = h + 1;
    if (next > budget) throw BudgetError("c_prime enumeration budget exceeded");
    box_points(h, next, [&](const std::vector<ZZ>& x, const ZZ&) { rt.add(x); });
    h = next;
    if (rt.rank() >= k) return h;
  }
}

std::vector<MinimalFamily> MinimaEngine::minimal_families(int k, const ZZ& x_max,
                                                          FamilyMode mode, long budget) const {
  check_k(k, L_.d);
  auto& sc = scanner(k, mode);
  auto snaps = sc.snapshots_upto(x_max, budget);
  std::vector<MinimalFamily> out;
  for (const auto& s : snaps) {
    MinimalFamily f;
    f.vectors = s.chain;
    f.height = s.height;
    f.defect = s.value;
    out.push_back(std::move(f));
  }
  return out;
}

PsiResult MinimaEngine::psi_from_families(int k, const CReal& Q, long budget) const {
  check_k(k, L_.d);
  if (certified_compare(Q, CReal::integer(1)) == Cmp::LT)
    throw DomainError("psi requires Q >= 1");
  CReal thr = CReal::integer(1) / Q;
  auto& sc = scanner(k, FamilyMode::ETA);
  auto snap = sc.advance_until_value_le(thr, budget);
  PsiResult r;
  r.value = snap.height;
  r.defect = snap.value;
  r.witnesses = snap.chain;
  return r;
}

PiecewiseConstantFunction MinimaEngine::psi_prime_function(int k, const ZZ& x_max,
                                                           long budget) const {
  check_k(k, L_.d);
  auto& sc = scanner(k, FamilyMode::ETA_PRIME);
  auto snaps = sc.snapshots_upto(x_max, budget);
  if (snaps.empty()) throw DomainError("x_max below C'_k");
  PiecewiseConstantFunction f;
  f.left_continuous = false;
  f.domain_lo = CReal::integer(snaps.front().height);  // = C'_k
  f.domain_hi = CReal::integer(x_max);
  for (size_t i = 0; i < snaps.size(); ++i) {
    if (i > 0) f.breakpoints.push_back(CReal::integer(snaps[i].height));
    f.values.push_back(CReal::integer(1) / snaps[i].value);
  }
  return f;
}

PiecewiseConstantFunction MinimaEngine::psi_function(int k, const CReal& q_max,
                                                     long budget) const {
  check_k(k, L_.d);
  if (certified_compare(q_max, CReal::integer(1)) == Cmp::LT)
    throw DomainError("psi requires Q >= 1");
  CReal thr = CReal::integer(1) / q_max;
  auto& sc = scanner(k, FamilyMode::ETA);
  sc.advance_until_value_le(thr, budget);
  auto snaps = sc.snapshots_upto(sc.scanned_height(), budget);
  PiecewiseConstantFunction f;
  f.left_continuous = true;
  f.domain_lo = CReal::integer(1);
  f.domain_hi = q_max;
  // Psi is defined from Q = 1: skip leading families with defect > 1
  size_t first = 0;
  while (first < snaps.size() &&
         certified_compare(snaps[first].value, CReal::integer(1)) == Cmp::GT)
    ++first;
  if (first == snaps.size()) throw Error("no admissible family at Q = 1");
  for (size_t i = first; i < snaps.size(); ++i) {
    if (i > first) {
      CReal bp = CReal::integer(1) / snaps[i - 1].value;
      if (certified_compare(bp, q_max) != Cmp::LT) break;
      f.breakpoints.push_back(bp);
    }
    f.values.push_back(CReal::integer(snaps[i].height));
  }
  return f;
}

LambdaResult MinimaEngine::successive_minimum(BodyKind kind, const CReal& Q, const CReal& K,
                                              int k, long budget) const {
  return dpa::successive_minimum(ConvexBodySpec{kind, Q, K, fv_}, L_, k, budget);
}

LambdaResult successive_minimum(const ConvexBodySpec& body, const LatticeBasis& L, int k,
                                long budget) {
  check_k(k, L.d);
  if (certified_sign(body.Q) <= 0 || certified_sign(body.K) <= 0)
    throw DomainError("degenerate body");
  const bool primal = body.kind == BodyKind::PRIMAL;
  CReal r = primal ? body.K : body.Q;
  const ConvexBodySpec& b = body;
  auto gauge = [b, primal](const std::vector<ZZ>& x) -> CReal {
    ZZ h(0);
    for (const auto& c : x) {
      ZZ a = ZZ(::abs(c));
      if (a > h) h = a;
    }
    CReal ht = CReal::integer(h);
    if (primal) return CReal::max(ht / b.K, b.Q * eta_defect(b.frequency, x));
    return CReal::max(ht / b.Q, b.K * eta_prime_defect(b.frequency, x));
  };
  return lambda_k_gauge(gauge, r, L, k, budget);
}

DualityReport MinimaEngine::duality_check(int k, const CReal& Q, long budget) const {
  check_k(k, L_.d);
  int n = fv_.n, d = L_.d;
  ZZ cpk = c_prime(k, budget);
  CReal q0 = CReal::max(CReal::integer(1),
                        CReal::integer(long(n) + 2) * CReal::integer(cpk) / fv_.norm_inf);
  if (certified_compare(Q, q0) == Cmp::LT) throw DomainError("Q below Q0");
  ZZ dfact(1);
  for (int i = 2; i <= d; ++i) dfact *= i;
  CReal c1 = fv_.norm_inf / CReal::integer(long(n) + 1);
  CReal c2 = fv_.norm_inf / CReal::integer(long(n) + 2);
  CReal c3 = L_.determinant * L_.determinant * CReal::integer(dfact) * fv_.norm_inf;
  CReal c4 = CReal::integer(2) * c3;

  DualityReport rep;
  rep.k = k;
  rep.q0 = q0;
  auto p = psi(k, Q, budget);
  rep.psi_value = p.value;
  auto pa = psi_prime(d + 1 - k, c2 * Q, budget);
  auto pb = psi_prime(d + 1 - k, c4 * Q, budget);
  rep.psi_prime_at_c2q = pa.value;
  rep.psi_prime_at_c4q = pb.value;
  rep.lhs = c1 * pa.value;
  rep.rhs = c3 * pb.value;
  CReal psiv = CReal::integer(p.value);
  rep.lhs_ok = certified_compare(rep.lhs, psiv) != Cmp::GT;
  rep.rhs_ok = certified_compare(psiv, rep.rhs) != Cmp::GT;
  rep.ratio_lhs = (psiv / rep.lhs).to_double();
  rep.ratio_rhs = (rep.rhs / psiv).to_double();
  return rep;
}

LambdaResult lambda_k_gauge(const std::function<CReal(const std::vector<ZZ>&)>& gauge,
                            const CReal& outer_radius, const LatticeBasis& L, int k,
                            long budget) {
  // reuse the engine's box enumeration; the frequency content is irrelevant
  std::vector<CReal> ones(L.n, CReal::integer(1));
  MinimaEngine aux(make_frequency(ones, std::nullopt), L);
  bool std_basis = (L.d == L.n);
  for (int i = 0; i < L.d && std_basis; ++i)
    for (int j = 0; j < L.n && std_basis; ++j)
      if (L.basis[i][j] != (i == j ? 1 : 0)) std_basis = false;

  struct P {
    std::vector<ZZ> x;
    CReal g;
    double glo, ghi;
    ZZ h;
  };
  std::vector<P> buf;
  CReal best;  // k-th greedy gauge value once rank k is reached
  bool have = false;

  auto consider = [&](const std::vector<ZZ>& x) {
    CReal g = gauge(x);
    auto [lo, hi] = g.to_double_bounds();
    if (have) {
      double bhi = best.to_double_bounds().second;
      if (pad_lo(lo) > pad_hi(bhi)) return;
      if (certified_compare(g, best) == Cmp::GT) return;
    }
    ZZ hh(0);
    for (const auto& c : x) {
      ZZ a = ZZ(::abs(c));
      if (a > hh) hh = a;
    }
    buf.push_back(P{x, g, lo, hi, hh});
  };
  auto regreedy = [&]() -> std::vector<int> {
    std::vector<int> idx(buf.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = (int)i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      if (pad_hi(buf[a].ghi) < pad_lo(buf[b].glo)) return true;
      if (pad_hi(buf[b].ghi) < pad_lo(buf[a].glo)) return false;
      Cmp c = certified_compare(buf[a].g, buf[b].g);
      if (c != Cmp::EQ) return c == Cmp::LT;
      int hc = cmp(buf[a].h, buf[b].h);
      if (hc != 0) return hc < 0;
      return lex_less(buf[a].x, buf[b].x);
    });
    RankTracker rt;
    std::vector<int> chain;
    for (int i : idx) {
      if (rt.add(buf[i].x)) {
        chain.push_back(i);
        if ((int)chain.size() == k) break;
      }
    }
    if ((int)chain.size() == k) {
      best = buf[chain.back()].g;
      have = true;
    }
    return chain;
  };

  std::vector<int> chain;
  ZZ h(0);
  while (true) {
    ZZ next = h + 1;
    if (next > budget) throw BudgetError("lambda enumeration budget exceeded");
    size_t before = buf.size();
    if (std_basis) {
      surface_points_std(L.n, zz_to_long(next),
                         [&](const std::vector<ZZ>& x) { consider(x); });
    } else {
      aux.box_points(h, next, [&](const std::vector<ZZ>& x, const ZZ&) { consider(x); });
    }
    h = next;
    if (buf.size() != before) chain = regreedy();
    if (have) {
      // every later point has gauge >= (h+1)/outer_radius
      CReal fut = CReal::integer(ZZ(h + 1)) / outer_radius;
      if (certified_compare(fut, best) == Cmp::GT) break;
    }
  }
  LambdaResult r;
  r.value = best;
  for (int i : chain) r.vectors.push_back(buf[i].x);
  return r;
}

CReal PiecewiseConstantFunction::eval(const CReal& x) const {
  if (certified_compare(x, domain_lo) == Cmp::LT ||
      certified_compare(x, domain_hi) == Cmp::GT)
    throw DomainError("argument outside the function domain");
  size_t idx = 0;
  for (const auto& b : breakpoints) {
    Cmp c = certified_compare(b, x);
    bool before = left_continuous ? (c == Cmp::LT) : (c != Cmp::GT);
    if (before)
      ++idx;
    else
      break;
  }
  return values[idx];
}

}  // namespace dpa
