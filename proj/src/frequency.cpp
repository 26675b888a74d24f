#include "dpa/frequency.hpp"

#include <cctype>
#include <cmath>

#include "dpa/error.hpp"

namespace dpa {

namespace {

// --- recursive-descent parser ------------------------------------------
struct Parser {
  const std::string& s;
  size_t i = 0;

  explicit Parser(const std::string& text) : s(text) {}

  void skip_ws() {
    while (i < s.size() && std::isspace((unsigned char)s[i])) ++i;
  }
  [[noreturn]] void fail(const std::string& what) {
    throw ParseError(what + " at position " + std::to_string(i) + " in \"" + s + "\"");
  }
  bool eat(char c) {
    skip_ws();
    if (i < s.size() && s[i] == c) {
      ++i;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }
  bool at_end() {
    skip_ws();
    return i >= s.size();
  }

  std::string ident() {
    skip_ws();
    size_t j = i;
    while (j < s.size() && (std::isalpha((unsigned char)s[j]) || s[j] == '_')) ++j;
    std::string w = s.substr(i, j - i);
    i = j;
    return w;
  }

  ZZ integer_literal() {
    skip_ws();
    size_t j = i;
    if (j < s.size() && (s[j] == '-' || s[j] == '+')) ++j;
    size_t k = j;
    while (k < s.size() && std::isdigit((unsigned char)s[k])) ++k;
    if (k == j) fail("expected integer");
    ZZ v(s.substr(i, k - i));
    i = k;
    return v;
  }

  // digits [ "." digits ] [ ("e"|"E") [sign] digits ] as an exact rational
  QQ number_literal() {
    skip_ws();
    size_t start = i;
    while (i < s.size() && std::isdigit((unsigned char)s[i])) ++i;
    if (i == start) fail("expected number");
    ZZ intpart(s.substr(start, i - start));
    QQ val(intpart);
    if (i < s.size() && s[i] == '.') {
      ++i;
      size_t fs = i;
      while (i < s.size() && std::isdigit((unsigned char)s[i])) ++i;
      if (i > fs) {
        ZZ frac(s.substr(fs, i - fs));
        ZZ den(1);
        mpz_ui_pow_ui(den.get_mpz_t(), 10, (unsigned long)(i - fs));
        val += QQ(frac, den);
      }
    }
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
      ++i;
      long sign = 1;
      if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        if (s[i] == '-') sign = -1;
        ++i;
      }
      size_t es = i;
      while (i < s.size() && std::isdigit((unsigned char)s[i])) ++i;
      if (i == es) fail("expected exponent digits");
      unsigned long e = std::stoul(s.substr(es, i - es));
      ZZ p10;
      mpz_ui_pow_ui(p10.get_mpz_t(), 10, e);
      if (sign > 0)
        val *= QQ(p10);
      else
        val /= QQ(p10);
    }
    val.canonicalize();
    return val;
  }

  std::vector<ZZ> int_list() {
    expect('[');
    std::vector<ZZ> out;
    out.push_back(integer_literal());
    while (eat(',')) out.push_back(integer_literal());
    expect(']');
    return out;
  }

  CReal expr() {
    CReal v = term();
    for (;;) {
      if (eat('+'))
        v = v + term();
      else if (eat('-'))
        v = v - term();
      else
        return v;
    }
  }

  CReal term() {
    CReal v = factor();
    for (;;) {
      if (eat('*'))
        v = v * factor();
      else if (eat('/'))
        v = v / factor();
      else
        return v;
    }
  }

  CReal factor() {
    if (eat('-')) return factor().neg();
    if (eat('+')) return factor();
    return primary();
  }

  CReal primary() {
    skip_ws();
    if (i >= s.size()) fail("unexpected end of input");
    char c = s[i];
    if (std::isdigit((unsigned char)c)) return CReal::rational(number_literal());
    if (c == '(') {
      ++i;
      CReal v = expr();
      expect(')');
      return v;
    }
    std::string w = ident();
    if (w.empty()) fail("unexpected character");
    if (w == "golden") return CReal::golden();
    if (w == "sqrt") {
      expect('(');
      ZZ m = integer_literal();
      expect(')');
      if (m < 0) fail("sqrt of negative integer");
      return CReal::sqrt_int(m);
    }
    if (w == "cbrt") {
      expect('(');
      ZZ m = integer_literal();
      expect(')');
      return CReal::cbrt_int(m);
    }
    if (w == "root") {
      expect('(');
      std::vector<ZZ> coeffs = int_list();
      expect(',');
      ZZ idx = integer_literal();
      expect(')');
      ZPoly p;
      p.c = coeffs;
      p.trim();
      if (p.is_zero() || p.deg() < 1) fail("root() needs a nonconstant polynomial");
      if (idx < 1 || idx > 64) fail("root index out of range");
      return CReal::root_of(p, (int)mpz_get_si(idx.get_mpz_t()));
    }
    fail("unknown identifier \"" + w + "\"");
  }
};

// exact rational kernel of an integer matrix (rows are the generators),
// returned as integer vectors spanning {v : g . v = 0 for all rows g}
std::vector<std::vector<ZZ>> rational_kernel(const std::vector<std::vector<ZZ>>& rows, int n) {
  std::vector<std::vector<QQ>> m;
  for (const auto& r : rows) {
    std::vector<QQ> q(n);
    for (int j = 0; j < n; ++j) q[j] = QQ(r[j]);
    m.push_back(std::move(q));
  }
  int nr = (int)m.size();
  std::vector<int> pivot_col;
  int row = 0;
  for (int col = 0; col < n && row < nr; ++col) {
    int pr = -1;
    for (int r = row; r < nr; ++r)
      if (m[r][col] != 0) {
        pr = r;
        break;
      }
    if (pr < 0) continue;
    std::swap(m[row], m[pr]);
    QQ inv = m[row][col];
    for (int j = 0; j < n; ++j) m[row][j] /= inv;
    for (int r = 0; r < nr; ++r) {
      if (r == row || m[r][col] == 0) continue;
      QQ f = m[r][col];
      for (int j = 0; j < n; ++j) m[r][j] -= f * m[row][j];
    }
    pivot_col.push_back(col);
    ++row;
  }
  std::vector<bool> is_pivot(n, false);
  for (int c : pivot_col) is_pivot[c] = true;
  std::vector<std::vector<ZZ>> kernel;
  for (int freec = 0; freec < n; ++freec) {
    if (is_pivot[freec]) continue;
    std::vector<QQ> v(n, QQ(0));
    v[freec] = 1;
    for (size_t r = 0; r < pivot_col.size(); ++r) v[pivot_col[r]] = -m[r][freec];
    ZZ den(1);
    for (int j = 0; j < n; ++j) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), v[j].get_den_mpz_t());
    std::vector<ZZ> iv(n);
    for (int j = 0; j < n; ++j) {
      QQ scaled = v[j] * QQ(den);
      scaled.canonicalize();
      iv[j] = scaled.get_num();
    }
    kernel.push_back(std::move(iv));
  }
  return kernel;
}

}  // namespace

CReal FrequencyVector::dot(const std::vector<ZZ>& k) const {
  CReal acc;
  for (int i = 0; i < n; ++i) {
    if (k[i] == 0) continue;
    acc = acc + CReal::rational(QQ(k[i])) * alpha[i];
  }
  return acc;
}

FrequencyVector make_frequency(const std::vector<CReal>& components,
                               const std::optional<std::vector<std::vector<ZZ>>>& subspace) {
  int n = (int)components.size();
  if (n < 1) throw ParseError("frequency vector must have at least one component");

  // first component of maximal |.|; swap it to the front
  int arg = 0;
  for (int i = 1; i < n; ++i)
    if (certified_compare(components[i].abs(), components[arg].abs()) == Cmp::GT) arg = i;
  if (certified_sign(components[arg]) == 0) throw DomainError("zero frequency vector rejected");

  FrequencyVector fv;
  fv.n = n;
  fv.perm.resize(n);
  for (int i = 0; i < n; ++i) fv.perm[i] = i;
  std::swap(fv.perm[0], fv.perm[arg]);
  for (int i = 0; i < n; ++i) fv.alpha.push_back(components[fv.perm[i]]);
  fv.norm_inf = fv.alpha[0].abs();

  if (subspace) {
    if (subspace->empty()) throw ParseError("subspace spanning set is empty");
    for (const auto& g : *subspace)
      if ((int)g.size() != n) throw ParseError("subspace generator has wrong dimension");
    fv.full_space = false;
    for (const auto& g : *subspace) {
      std::vector<ZZ> pg(n);
      for (int i = 0; i < n; ++i) pg[i] = g[fv.perm[i]];
      fv.subspace_gens.push_back(std::move(pg));
    }
    auto kernel = rational_kernel(fv.subspace_gens, n);
    fv.d = n - (int)kernel.size();
    if (fv.d < 1) throw DomainError("declared subspace has rank 0");
    // alpha must lie in span(F): every complement direction is orthogonal
    for (const auto& v : kernel)
      if (certified_sign(fv.dot(v)) != 0)
        throw DomainError("declared subspace does not contain alpha");
  } else {
    fv.full_space = true;
    fv.d = n;
  }

  fv.lo_d.resize(n);
  fv.hi_d.resize(n);
  for (int i = 0; i < n; ++i) {
    auto [lo, hi] = fv.alpha[i].to_double_bounds();
    fv.lo_d[i] = lo;
    fv.hi_d[i] = hi;
  }
  return fv;
}

std::vector<CReal> parse_component_list(const std::string& text) {
  Parser p(text);
  p.expect('[');
  std::vector<CReal> out;
  out.push_back(p.expr());
  while (p.eat(',')) out.push_back(p.expr());
  p.expect(']');
  if (!p.at_end()) p.fail("trailing characters");
  return out;
}

CReal parse_real_expr(const std::string& text) {
  Parser p(text);
  CReal v = p.expr();
  if (!p.at_end()) p.fail("trailing characters");
  return v;
}

std::optional<std::vector<std::vector<ZZ>>> parse_subspace(const std::string& text) {
  Parser probe(text);
  std::string w = probe.ident();
  if (w == "full" && probe.at_end()) return std::nullopt;
  Parser p(text);
  p.expect('[');
  std::vector<std::vector<ZZ>> gens;
  gens.push_back(p.int_list());
  while (p.eat(',')) gens.push_back(p.int_list());
  p.expect(']');
  if (!p.at_end()) p.fail("trailing characters");
  return gens;
}

FrequencyVector parse_frequency(const std::string& vec_text, const std::string& subspace_text) {
  return make_frequency(parse_component_list(vec_text), parse_subspace(subspace_text));
}

bool no_small_integer_relation(const FrequencyVector& fv, long height) {
  int n = fv.n;
  if (n == 1) return true;
  std::vector<double> ad(n);
  for (int i = 0; i < n; ++i) ad[i] = 0.5 * (fv.lo_d[i] + fv.hi_d[i]);
  double a0 = ad[0];
  // enumerate the trailing coordinates; a relation pins k_0 to the nearest
  // integer of -(sum k_i alpha_i)/alpha_0, so only near-integers need the
  // certified check
  std::vector<long> k(n, 0);
  for (int i = 1; i < n; ++i) k[i] = -height;
  double tol = 1e-7;
  for (;;) {
    double s = 0;
    for (int i = 1; i < n; ++i) s += (double)k[i] * ad[i];
    double t = -s / a0;
    double k0 = std::nearbyint(t);
    if (std::fabs(t - k0) < tol && std::fabs(k0) <= (double)height) {
      bool all_zero = k0 == 0;
      for (int i = 1; i < n && all_zero; ++i) all_zero = (k[i] == 0);
      if (!all_zero) {
        std::vector<ZZ> kk(n);
        kk[0] = ZZ((long)k0);
        for (int i = 1; i < n; ++i) kk[i] = ZZ(k[i]);
        if (certified_sign(fv.dot(kk)) == 0) return false;
      }
    }
    int i = n - 1;
    while (i >= 1 && k[i] == height) k[i--] = -height;
    if (i < 1) break;
    ++k[i];
  }
  return true;
}

}  // namespace dpa
