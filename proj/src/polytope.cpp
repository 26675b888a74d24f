#include "dpa/polytope.hpp"

#include <algorithm>

#include "dpa/error.hpp"

namespace dpa {

namespace {

CReal dot(const std::vector<CReal>& a, const std::vector<CReal>& b) {
  CReal s = a[0] * b[0];
  for (size_t i = 1; i < a.size(); ++i) s = s + a[i] * b[i];
  return s;
}

CReal det2(const CReal& a, const CReal& b, const CReal& c, const CReal& d) {
  return a * d - b * c;
}

CReal det3(const std::vector<std::vector<CReal>>& m) {
  return m[0][0] * det2(m[1][1], m[1][2], m[2][1], m[2][2]) -
         m[0][1] * det2(m[1][0], m[1][2], m[2][0], m[2][2]) +
         m[0][2] * det2(m[1][0], m[1][1], m[2][0], m[2][1]);
}

CReal det_n(std::vector<std::vector<CReal>> m) {
  switch (m.size()) {
    case 1:
      return m[0][0];
    case 2:
      return det2(m[0][0], m[0][1], m[1][0], m[1][1]);
    case 3:
      return det3(m);
    default:
      throw DomainError("polytope operations are limited to dimension <= 3");
  }
}

// Cramer solve A x = b; caller guarantees det(A) != 0
std::vector<CReal> cramer(const std::vector<std::vector<CReal>>& A,
                          const std::vector<CReal>& b, const CReal& D) {
  int d = (int)b.size();
  std::vector<CReal> x(d);
  for (int i = 0; i < d; ++i) {
    auto M = A;
    for (int r = 0; r < d; ++r) M[r][i] = b[r];
    x[i] = det_n(M) / D;
  }
  return x;
}

bool points_equal(const std::vector<CReal>& a, const std::vector<CReal>& b) {
  for (size_t i = 0; i < a.size(); ++i)
    if (certified_compare(a[i], b[i]) != Cmp::EQ) return false;
  return true;
}

// counterclockwise hull order of distinct points in convex position
std::vector<int> hull_order_2d(const std::vector<std::vector<CReal>>& pts) {
  int m = (int)pts.size();
  std::vector<int> order;
  if (m <= 2) {
    for (int i = 0; i < m; ++i) order.push_back(i);
    return order;
  }
  auto orient = [&](int p, int q, int r) {
    CReal c = det2(pts[q][0] - pts[p][0], pts[q][1] - pts[p][1], pts[r][0] - pts[p][0],
                   pts[r][1] - pts[p][1]);
    return certified_sign(c);
  };
  int start = 0;
  for (int i = 1; i < m; ++i) {
    Cmp c = certified_compare(pts[i][0], pts[start][0]);
    if (c == Cmp::LT ||
        (c == Cmp::EQ && certified_compare(pts[i][1], pts[start][1]) == Cmp::LT))
      start = i;
  }
  int cur = start;
  do {
    order.push_back(cur);
    int next = (cur + 1) % m;
    for (int w = 0; w < m; ++w) {
      if (w == cur || w == next) continue;
      if (orient(cur, next, w) < 0) next = w;
    }
    cur = next;
    if ((int)order.size() > m) throw Error("hull ordering failed");
  } while (cur != start);
  return order;
}

}  // namespace

Polytope Polytope::from_halfspaces(int dim, std::vector<Halfspace> hs) {
  if (dim < 1 || dim > 3) throw DomainError("polytope operations are limited to dimension <= 3");
  Polytope P;
  P.dim_ = dim;
  P.hs_ = std::move(hs);
  int m = (int)P.hs_.size();
  if (m < dim + 1) throw DomainError("too few halfspaces for a bounded polytope");
  std::vector<int> pick(dim);
  std::function<void(int, int)> subsets = [&](int from, int got) {
    if (got == dim) {
      std::vector<std::vector<CReal>> A(dim);
      std::vector<CReal> b(dim);
      for (int i = 0; i < dim; ++i) {
        A[i] = P.hs_[pick[i]].a;
        b[i] = P.hs_[pick[i]].b;
      }
      CReal D = det_n(A);
      if (certified_sign(D) == 0) return;
      auto x = cramer(A, b, D);
      for (const auto& h : P.hs_)
        if (certified_compare(dot(h.a, x), h.b) == Cmp::GT) return;
      for (const auto& v : P.verts_)
        if (points_equal(v, x)) return;
      P.verts_.push_back(std::move(x));
      return;
    }
    for (int i = from; i <= m - (dim - got); ++i) {
      pick[got] = i;
      subsets(i + 1, got + 1);
    }
  };
  subsets(0, 0);
  if (P.verts_.empty()) throw DomainError("halfspace intersection has no vertices");
  return P;
}

bool Polytope::contains(const std::vector<CReal>& p) const {
  for (const auto& h : hs_)
    if (certified_compare(dot(h.a, p), h.b) == Cmp::GT) return false;
  return true;
}

CReal Polytope::support(const std::vector<CReal>& dir) const {
  CReal s = dot(verts_[0], dir);
  for (size_t i = 1; i < verts_.size(); ++i) s = CReal::max(s, dot(verts_[i], dir));
  return s;
}

CReal Polytope::gauge(const std::vector<ZZ>& x) const {
  std::vector<CReal> p(x.size());
  for (size_t i = 0; i < x.size(); ++i) p[i] = CReal::integer(x[i]);
  CReal g;
  bool first = true;
  for (const auto& h : hs_) {
    if (certified_sign(h.b) <= 0) throw DomainError("gauge requires 0 in the interior");
    CReal t = dot(h.a, p) / h.b;
    g = first ? t : CReal::max(g, t);
    first = false;
  }
  return g;
}

CReal Polytope::outer_radius() const {
  CReal r;
  bool first = true;
  for (const auto& v : verts_)
    for (const auto& c : v) {
      r = first ? c.abs() : CReal::max(r, c.abs());
      first = false;
    }
  return r;
}

CReal Polytope::volume() const {
  if (dim_ == 1) {
    CReal lo = verts_[0][0], hi = verts_[0][0];
    for (const auto& v : verts_) {
      lo = CReal::min(lo, v[0]);
      hi = CReal::max(hi, v[0]);
    }
    return hi - lo;
  }
  if (dim_ == 2) {
    auto order = hull_order_2d(verts_);
    int m = (int)order.size();
    if (m < 3) return CReal();  // degenerate
    CReal two_a;
    for (int i = 0; i < m; ++i) {
      const auto& p = verts_[order[i]];
      const auto& q = verts_[order[(i + 1) % m]];
      CReal c = det2(p[0], p[1], q[0], q[1]);
      two_a = (i == 0) ? c : two_a + c;
    }
    return two_a.abs() / CReal::integer(2);
  }
  // dim 3: fan triangulation of each facet polygon, cones to the origin
  CReal six_v;
  bool any = false;
  for (const auto& h : hs_) {
    std::vector<int> on;
    for (size_t i = 0; i < verts_.size(); ++i)
      if (certified_compare(dot(h.a, verts_[i]), h.b) == Cmp::EQ) on.push_back((int)i);
    if ((int)on.size() < 3) continue;
    int drop = -1;
    for (int j = 0; j < 3; ++j)
      if (certified_sign(h.a[j]) != 0) {
        drop = j;
        break;
      }
    if (drop < 0) throw Error("zero facet normal");
    std::vector<std::vector<CReal>> proj;
    for (int i : on) {
      std::vector<CReal> p;
      for (int j = 0; j < 3; ++j)
        if (j != drop) p.push_back(verts_[i][j]);
      proj.push_back(std::move(p));
    }
    auto order = hull_order_2d(proj);
    for (size_t t = 1; t + 1 < order.size(); ++t) {
      std::vector<std::vector<CReal>> M = {verts_[on[order[0]]], verts_[on[order[t]]],
                                           verts_[on[order[t + 1]]]};
      CReal d = det3(M).abs();
      six_v = any ? six_v + d : d;
      any = true;
    }
  }
  if (!any) return CReal();
  return six_v / CReal::integer(6);
}

Polytope Polytope::polar() const {
  std::vector<Halfspace> hs;
  for (const auto& v : verts_) hs.push_back(Halfspace{v, CReal::integer(1)});
  return from_halfspaces(dim_, std::move(hs));
}

Polytope primal_body(const FrequencyVector& fv, const CReal& Q, const CReal& K) {
  int n = fv.n;
  std::vector<Halfspace> hs;
  CReal one = CReal::integer(1);
  for (int j = 0; j < n; ++j)
    for (int s : {1, -1}) {
      std::vector<CReal> a(n, CReal());
      a[j] = CReal::integer(s);
      hs.push_back(Halfspace{a, K});
    }
  for (int j = 1; j < n; ++j)
    for (int s : {1, -1}) {
      // s (a_j x_0 - a_0 x_j) <= 1/Q
      std::vector<CReal> a(n, CReal());
      a[0] = CReal::integer(s) * fv.alpha[j];
      a[j] = CReal::integer(-s) * fv.alpha[0];
      hs.push_back(Halfspace{a, one / Q});
    }
  return Polytope::from_halfspaces(n, std::move(hs));
}

Polytope dual_body(const FrequencyVector& fv, const CReal& Q, const CReal& K) {
  int n = fv.n;
  std::vector<Halfspace> hs;
  CReal one = CReal::integer(1);
  for (int j = 0; j < n; ++j)
    for (int s : {1, -1}) {
      std::vector<CReal> a(n, CReal());
      a[j] = CReal::integer(s);
      hs.push_back(Halfspace{a, Q});
    }
  for (int s : {1, -1}) {
    std::vector<CReal> a(n);
    for (int j = 0; j < n; ++j) a[j] = CReal::integer(s) * fv.alpha[j];
    hs.push_back(Halfspace{a, one / K});
  }
  return Polytope::from_halfspaces(n, std::move(hs));
}

}  // namespace dpa
