#pragma once
#include <optional>
#include <string>
#include <vector>

#include "dpa/certified.hpp"

namespace dpa {

// Frequency vector alpha with the coordinate permutation that puts a
// component of maximal absolute value first, so |alpha|_inf = |alpha_0|.
// The rational subspace F is either the full space or declared by an
// integer spanning set; it is validated (alpha in span F) but its
// minimality is the caller's assertion.
struct FrequencyVector {
  int n = 0;
  std::vector<CReal> alpha;  // permuted components
  std::vector<int> perm;     // alpha[i] = input[perm[i]]
  CReal norm_inf;            // |alpha_0|
  bool full_space = true;
  std::vector<std::vector<ZZ>> subspace_gens;  // permuted coordinates
  int d = 0;                                   // dim F

  // outward double bounds per component, for fast enumeration prefilters
  std::vector<double> lo_d, hi_d;

  const CReal& a0() const { return alpha[0]; }
  // k . alpha as an exact expression
  CReal dot(const std::vector<ZZ>& k) const;
};

FrequencyVector make_frequency(const std::vector<CReal>& components,
                               const std::optional<std::vector<std::vector<ZZ>>>& subspace);

// grammar: vec := "[" expr ("," expr)* "]"
//          expr := rational | "sqrt(" int ")" | "cbrt(" int ")"
//                | "root(" poly "," index ")" | "golden"
//                | arithmetic (+ - * /, parentheses, unary minus) on these
// poly is an integer coefficient list "[c0,c1,...]", constant term first;
// index selects among the real roots in increasing order, 1-based.
std::vector<CReal> parse_component_list(const std::string& text);
CReal parse_real_expr(const std::string& text);

// "full" or a bracketed list of integer vectors "[[2,4],[0,1]]",
// in the same (unpermuted) coordinates as the component list
std::optional<std::vector<std::vector<ZZ>>> parse_subspace(const std::string& text);

FrequencyVector parse_frequency(const std::string& vec_text,
                                const std::string& subspace_text = "full");

// sanity oracle for declared full independence: scans |k|_inf <= height for
// an integer relation k . alpha = 0 and returns true when none exists
bool no_small_integer_relation(const FrequencyVector& fv, long height);

}  // namespace dpa
