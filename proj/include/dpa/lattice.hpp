#pragma once
#include <optional>
#include <vector>

#include "dpa/certified.hpp"

namespace dpa {

// Basis of a rank-d lattice in R^n, rows of `basis`.  Primal lattices
// (Z^n intersected with a rational subspace) have integer entries and a
// saturated Z-span; dual lattices have rational entries.  gram_det is the
// exact determinant of the Gram matrix, so det = sqrt(gram_det).
struct LatticeBasis {
  int n = 0;
  int d = 0;
  std::vector<std::vector<QQ>> basis;
  bool dual_flag = false;
  QQ gram_det;
  CReal determinant;

  std::vector<ZZ> row_int(int j) const;  // primal rows only
};

LatticeBasis full_lattice(int n);
// saturated basis of Z^n ∩ span_R(gens) by exact integer elimination
LatticeBasis intersect_lattice(const std::vector<std::vector<ZZ>>& gens);
// {x in span : x.y in Z for all y in L}, basis rows (G^-1)B; checks
// det(L) * det(L*) = 1 exactly
LatticeBasis dual_lattice(const LatticeBasis& L);

// rational coordinates of x in the basis of L, or nullopt if x not in span
std::optional<std::vector<QQ>> span_coords(const LatticeBasis& L, const std::vector<QQ>& x);
bool lattice_member(const LatticeBasis& L, const std::vector<QQ>& x);
bool lattice_member(const LatticeBasis& L, const std::vector<ZZ>& x);

// Turns independent v_1..v_k in L into b_1..b_k whose Z-span is saturated
// in L with b_j in span(v_1..v_j) and b_j = sum_i gamma[j][i] v_i where
// |gamma[j][i]| <= 1/2 for i<j and 0 < gamma[j][j] <= 1; in particular
// |b_j|_inf <= j max_{i<=j} |v_i|_inf, and any seminorm bound eta(v_i) <= c
// transfers to eta(b_j) <= j c.
struct SaturateResult {
  std::vector<std::vector<ZZ>> b;
  std::vector<std::vector<QQ>> gamma;  // lower triangular, row j has j+1 entries
};
SaturateResult saturate_chain(const std::vector<std::vector<ZZ>>& v, const LatticeBasis& L);

// exact kernel over Z of the m x n integer matrix A (rows): basis of
// {x in Z^n : A x = 0}; the returned lattice is saturated by construction
std::vector<std::vector<ZZ>> integer_kernel(const std::vector<std::vector<ZZ>>& A, int n);

ZZ det_bareiss(std::vector<std::vector<ZZ>> m);

}  // namespace dpa
