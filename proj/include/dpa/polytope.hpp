#pragma once
#include <vector>

#include "dpa/certified.hpp"
#include "dpa/frequency.hpp"

namespace dpa {

struct Halfspace {
  std::vector<CReal> a;  // a . x <= b
  CReal b;
};

// Bounded, full-dimensional polytope with 0 in its interior, given by an
// irredundant-or-not list of halfspaces.  Vertex enumeration by d-subset
// solving (exact, d <= 3); all geometric predicates are certified.
class Polytope {
 public:
  static Polytope from_halfspaces(int dim, std::vector<Halfspace> hs);

  int dim() const { return dim_; }
  const std::vector<Halfspace>& halfspaces() const { return hs_; }
  const std::vector<std::vector<CReal>>& vertices() const { return verts_; }

  bool contains(const std::vector<CReal>& p) const;   // boundary included
  CReal support(const std::vector<CReal>& dir) const; // max_v v . dir
  CReal gauge(const std::vector<ZZ>& x) const;        // Minkowski functional
  CReal outer_radius() const;                         // max_v |v|_inf
  CReal volume() const;
  Polytope polar() const;  // {y : y . v <= 1 for every vertex v}

 private:
  int dim_ = 0;
  std::vector<Halfspace> hs_;
  std::vector<std::vector<CReal>> verts_;
};

// the bodies of interest as exact halfspace lists over the full space R^n:
//   primal: |x|_inf <= K, |x_0 a_j - a_0 x_j| <= 1/Q
//   dual:   |x|_inf <= Q, |x . a| <= 1/K
Polytope primal_body(const FrequencyVector& fv, const CReal& Q, const CReal& K);
Polytope dual_body(const FrequencyVector& fv, const CReal& Q, const CReal& K);

}  // namespace dpa
