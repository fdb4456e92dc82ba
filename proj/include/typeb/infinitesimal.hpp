#pragma once

// Mixed moments (phi, phi') of words in two infinitesimally free algebras.
//
// Algebra A is generated by one self-adjoint element `a`; its elements are
// polynomials and its state is given by two moment sequences. Algebra E is
// spanned by the unit and the matrix units e_st, s, t <= N0; phi reads the
// unit coefficient and phi' takes the N0 x N0 trace of the matrix part.
// Either slot may hold either kind of algebra.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "typeb/error.hpp"
#include "typeb/measures.hpp"
#include "typeb/rmt.hpp"

namespace typeb {

class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

template <class S>
struct Polynomial {
  std::vector<S> coeffs;  ///< coeffs[k] multiplies a^k

  static Polynomial constant(S c) { return {{c}}; }
  static Polynomial monomial(int k) {
    Polynomial p;
    p.coeffs.assign(static_cast<std::size_t>(k) + 1, S(0));
    p.coeffs.back() = S(1);
    return p;
  }
};

template <class S>
struct MatrixUnitElement {
  int n0 = 0;
  S unit = S(0);
  std::vector<S> mat;  ///< row-major n0 x n0

  static MatrixUnitElement identity(int n0) {
    return {n0, S(1), std::vector<S>(static_cast<std::size_t>(n0 * n0), S(0))};
  }
  static MatrixUnitElement unit_matrix(int n0, int s, int t) {
    if (s < 1 || t < 1 || s > n0 || t > n0) throw DomainError("matrix unit index exceeds N0");
    MatrixUnitElement e{n0, S(0), std::vector<S>(static_cast<std::size_t>(n0 * n0), S(0))};
    e.mat[static_cast<std::size_t>((s - 1) * n0 + (t - 1))] = S(1);
    return e;
  }
  S& at(int i, int j) { return mat[static_cast<std::size_t>(i * n0 + j)]; }
  const S& at(int i, int j) const { return mat[static_cast<std::size_t>(i * n0 + j)]; }
};

template <class S>
using Element = std::variant<Polynomial<S>, MatrixUnitElement<S>>;

template <class S>
struct InfinitesimalState {
  enum class Kind { polynomial, matrix_units };
  Kind kind = Kind::polynomial;
  std::vector<S> phi_moments;        ///< polynomial kind: phi(a^k); phi_moments[0] = 1
  std::vector<S> phi_prime_moments;  ///< polynomial kind: phi'(a^k); [0] = 0
  int n0 = 0;                        ///< matrix-unit kind

  S phi(const Element<S>& x) const {
    if (const auto* p = std::get_if<Polynomial<S>>(&x)) {
      require(Kind::polynomial);
      return apply(*p, phi_moments);
    }
    require(Kind::matrix_units);
    return std::get<MatrixUnitElement<S>>(x).unit;
  }

  S phi_prime(const Element<S>& x) const {
    if (const auto* p = std::get_if<Polynomial<S>>(&x)) {
      require(Kind::polynomial);
      return apply(*p, phi_prime_moments);
    }
    require(Kind::matrix_units);
    const auto& m = std::get<MatrixUnitElement<S>>(x);
    S tr(0);
    for (int i = 0; i < m.n0; ++i) tr += m.at(i, i);
    return tr;
  }

 private:
  void require(Kind k) const {
    if (k != kind) throw DomainError("element does not belong to this algebra");
  }
  static S apply(const Polynomial<S>& p, const std::vector<S>& moments) {
    if (p.coeffs.size() > moments.size()) throw DomainError("polynomial degree exceeds the available moments");
    S s(0);
    for (std::size_t k = 0; k < p.coeffs.size(); ++k) s += p.coeffs[k] * moments[k];
    return s;
  }
};

template <class S>
InfinitesimalState<S> polynomial_state(std::vector<S> phi_moments, std::vector<S> phi_prime_moments) {
  if (phi_moments.empty() || phi_moments[0] != S(1)) throw ConfigError("phi must be unital");
  if (phi_prime_moments.empty()) phi_prime_moments.assign(phi_moments.size(), S(0));
  if (phi_prime_moments[0] != S(0)) throw ConfigError("phi' must vanish on the unit");
  if (phi_prime_moments.size() != phi_moments.size()) throw ConfigError("moment sequences differ in length");
  InfinitesimalState<S> st;
  st.kind = InfinitesimalState<S>::Kind::polynomial;
  st.phi_moments = std::move(phi_moments);
  st.phi_prime_moments = std::move(phi_prime_moments);
  return st;
}

/// Finite-rank state on N0 x N0 matrices padded with zeros: phi is the unit
/// coefficient, phi' the trace of the matrix part.
template <class S = double>
InfinitesimalState<S> finite_rank_state(int n0) {
  if (n0 < 1) throw ConfigError("finite_rank_state: N0 must be positive");
  InfinitesimalState<S> st;
  st.kind = InfinitesimalState<S>::Kind::matrix_units;
  st.n0 = n0;
  return st;
}

/// diag(lambda_1, ..., lambda_N0) as an element of the matrix-unit algebra.
template <class S = double>
MatrixUnitElement<S> spike_element(const std::vector<S>& eigenvalues) {
  int n0 = static_cast<int>(eigenvalues.size());
  MatrixUnitElement<S> d{n0, S(0), std::vector<S>(static_cast<std::size_t>(n0 * n0), S(0))};
  for (int i = 0; i < n0; ++i) d.at(i, i) = eigenvalues[static_cast<std::size_t>(i)];
  return d;
}

// --- algebra operations ----------------------------------------------------

template <class S>
Polynomial<S> multiply(const Polynomial<S>& x, const Polynomial<S>& y) {
  if (x.coeffs.empty() || y.coeffs.empty()) return {};
  Polynomial<S> r;
  r.coeffs.assign(x.coeffs.size() + y.coeffs.size() - 1, S(0));
  for (std::size_t i = 0; i < x.coeffs.size(); ++i)
    for (std::size_t j = 0; j < y.coeffs.size(); ++j) r.coeffs[i + j] += x.coeffs[i] * y.coeffs[j];
  return r;
}

template <class S>
MatrixUnitElement<S> multiply(const MatrixUnitElement<S>& x, const MatrixUnitElement<S>& y) {
  if (x.n0 != y.n0) throw DomainError("matrix-unit elements of different sizes");
  const int n = x.n0;
  MatrixUnitElement<S> r{n, x.unit * y.unit, std::vector<S>(static_cast<std::size_t>(n * n), S(0))};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      S v = x.unit * y.at(i, j) + y.unit * x.at(i, j);
      for (int k = 0; k < n; ++k) v += x.at(i, k) * y.at(k, j);
      r.at(i, j) = v;
    }
  return r;
}

template <class S>
Element<S> multiply(const Element<S>& x, const Element<S>& y) {
  return std::visit(
      [](const auto& u, const auto& v) -> Element<S> {
        using U = std::decay_t<decltype(u)>;
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<U, V>)
          return multiply(u, v);
        else
          throw DomainError("cannot multiply elements of different algebra kinds");
      },
      x, y);
}

/// x - c 1
template <class S>
Element<S> shift(Element<S> x, const S& c) {
  if (auto* p = std::get_if<Polynomial<S>>(&x)) {
    if (p->coeffs.empty()) p->coeffs.push_back(S(0));
    p->coeffs[0] -= c;
  } else {
    std::get<MatrixUnitElement<S>>(x).unit -= c;
  }
  return x;
}

/// P(x) for a matrix-unit element x.
template <class S>
MatrixUnitElement<S> apply_polynomial(const MatrixUnitElement<S>& x, const std::vector<S>& coeffs) {
  MatrixUnitElement<S> result = MatrixUnitElement<S>::identity(x.n0);
  result.unit = S(0);
  MatrixUnitElement<S> power = MatrixUnitElement<S>::identity(x.n0);
  for (const S& c : coeffs) {
    result.unit += c * power.unit;
    for (std::size_t i = 0; i < result.mat.size(); ++i) result.mat[i] += c * power.mat[i];
    power = multiply(power, x);
  }
  return result;
}

// --- words -----------------------------------------------------------------

template <class S>
struct Letter {
  int tag = 0;  ///< 0 = algebra A, 1 = algebra E
  Element<S> element;
};

template <class S>
using NCWord = std::vector<Letter<S>>;

template <class S>
struct StatePair {
  const InfinitesimalState<S>& a;
  const InfinitesimalState<S>& e;
  const InfinitesimalState<S>& operator[](int tag) const { return tag == 0 ? a : e; }
};

namespace detail {

template <class S>
NCWord<S> merge_neighbours(const NCWord<S>& w) {
  NCWord<S> out;
  for (const auto& l : w) {
    if (!out.empty() && out.back().tag == l.tag)
      out.back().element = multiply(out.back().element, l.element);
    else
      out.push_back(l);
  }
  return out;
}

template <class S>
S phi_word(const NCWord<S>& word, const StatePair<S>& st);

// Shared expansion x_i = (x_i - phi(x_i)) + phi(x_i): sums over the proper
// subsets T of kept (centered) letters; the caller handles T = everything.
template <class S, class F>
S expand_proper_subsets(const NCWord<S>& w, const std::vector<S>& phis, F&& on_subword) {
  const std::size_t r = w.size();
  const unsigned long full = (1UL << r) - 1;
  S total(0);
  for (unsigned long mask = 0; mask < full; ++mask) {
    S coef(1);
    NCWord<S> sub;
    for (std::size_t i = 0; i < r; ++i) {
      if (mask & (1UL << i))
        sub.push_back({w[i].tag, shift(w[i].element, phis[i])});
      else
        coef *= phis[i];
    }
    if (coef == S(0)) continue;
    total += coef * on_subword(sub);
  }
  return total;
}

template <class S>
S phi_word(const NCWord<S>& word, const StatePair<S>& st) {
  NCWord<S> w = merge_neighbours(word);
  if (w.empty()) return S(1);
  if (w.size() == 1) return st[w[0].tag].phi(w[0].element);
  if (w.size() >= 8 * sizeof(unsigned long) - 1) throw DomainError("word too long");
  std::vector<S> phis;
  for (const auto& l : w) phis.push_back(st[l.tag].phi(l.element));
  // the fully centered alternating word has phi = 0
  return expand_proper_subsets(w, phis, [&](const NCWord<S>& sub) { return phi_word(sub, st); });
}

template <class S>
S phi_prime_word(const NCWord<S>& word, const StatePair<S>& st) {
  NCWord<S> w = merge_neighbours(word);
  if (w.empty()) return S(0);
  if (w.size() == 1) return st[w[0].tag].phi_prime(w[0].element);
  if (w.size() >= 8 * sizeof(unsigned long) - 1) throw DomainError("word too long");
  std::vector<S> phis;
  for (const auto& l : w) phis.push_back(st[l.tag].phi(l.element));
  S total = expand_proper_subsets(w, phis, [&](const NCWord<S>& sub) { return phi_prime_word(sub, st); });
  // centered alternating word: sum_j phi'(c_j) phi(c_1 .. c_{j-1} c_{j+1} .. c_r)
  for (std::size_t j = 0; j < w.size(); ++j) {
    S pp = st[w[j].tag].phi_prime(w[j].element);  // phi'(c_j) = phi'(x_j)
    if (pp == S(0)) continue;
    NCWord<S> rest;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (i != j) rest.push_back({w[i].tag, shift(w[i].element, phis[i])});
    total += pp * phi_word(rest, st);
  }
  return total;
}

}  // namespace detail

template <class S>
S free_moment(const NCWord<S>& word, const InfinitesimalState<S>& state_a, const InfinitesimalState<S>& state_e) {
  return detail::phi_word(word, StatePair<S>{state_a, state_e});
}

/// (phi(word), phi'(word)).
template <class S>
std::pair<S, S> infinitesimal_moment(const NCWord<S>& word, const InfinitesimalState<S>& state_a,
                                     const InfinitesimalState<S>& state_e) {
  StatePair<S> st{state_a, state_e};
  return {detail::phi_word(word, st), detail::phi_prime_word(word, st)};
}

// --- text syntax -------------------------------------------------------------
//
//   expr   := ['-'] term (('+' | '-') term)*
//   term   := factor (['*'] factor)*
//   factor := atom ['^' integer]
//   atom   := number | 'a' | 'e' digit digit | 'e(' int ',' int ')' | '(' expr ')'
//
// `a` is the A generator; e_st are matrix units. Juxtaposition multiplies.

struct Generator {
  int s = 0, t = 0;  ///< 0, 0 for `a`
  bool is_a() const { return s == 0; }
  auto operator<=>(const Generator&) const = default;
};

using Monomial = std::vector<Generator>;

/// Linear combination of monomials in a and the e_st.
struct NCPolynomial {
  std::map<Monomial, double> terms;

  int max_unit_index() const {
    int m = 0;
    for (const auto& [mono, c] : terms)
      for (const auto& g : mono) m = std::max({m, g.s, g.t});
    return m;
  }
  int max_a_degree() const {
    int best = 0;
    for (const auto& [mono, c] : terms)
      best = std::max(best, static_cast<int>(std::count_if(mono.begin(), mono.end(), [](const Generator& g) {
                        return g.is_a();
                      })));
    return best;
  }
};

namespace detail {

inline NCPolynomial poly_add(NCPolynomial x, const NCPolynomial& y, double sign) {
  for (const auto& [m, c] : y.terms) x.terms[m] += sign * c;
  std::erase_if(x.terms, [](const auto& kv) { return kv.second == 0.0; });
  return x;
}

inline NCPolynomial poly_mul(const NCPolynomial& x, const NCPolynomial& y) {
  NCPolynomial r;
  for (const auto& [m1, c1] : x.terms)
    for (const auto& [m2, c2] : y.terms) {
      Monomial m = m1;
      m.insert(m.end(), m2.begin(), m2.end());
      r.terms[m] += c1 * c2;
    }
  std::erase_if(r.terms, [](const auto& kv) { return kv.second == 0.0; });
  return r;
}

inline NCPolynomial poly_scalar(double c) {
  NCPolynomial p;
  if (c != 0.0) p.terms[{}] = c;
  return p;
}

class WordParser {
 public:
  explicit WordParser(std::string text) : s_(std::move(text)) {}

  NCPolynomial parse() {
    NCPolynomial p = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError("cannot parse word '" + s_ + "' at position " + std::to_string(pos_) + ": " + why);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  bool starts_atom() {
    skip();
    if (pos_ >= s_.size()) return false;
    char c = s_[pos_];
    return c == '(' || c == 'a' || c == 'e' || c == '.' || std::isdigit(static_cast<unsigned char>(c));
  }

  NCPolynomial expr() {
    double sign = 1.0;
    if (peek('-')) {
      ++pos_;
      sign = -1.0;
    } else if (peek('+')) {
      ++pos_;
    }
    NCPolynomial p = poly_add({}, term(), sign);
    while (true) {
      if (peek('+')) {
        ++pos_;
        p = poly_add(p, term(), 1.0);
      } else if (peek('-')) {
        ++pos_;
        p = poly_add(p, term(), -1.0);
      } else {
        return p;
      }
    }
  }

  NCPolynomial term() {
    if (!starts_atom()) fail("expected a factor");
    NCPolynomial p = factor();
    while (true) {
      if (peek('*')) {
        ++pos_;
        if (!starts_atom()) fail("expected a factor after '*'");
      } else if (!starts_atom()) {
        return p;
      }
      p = poly_mul(p, factor());
    }
  }

  NCPolynomial factor() {
    NCPolynomial base = atom();
    if (!peek('^')) return base;
    ++pos_;
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected an exponent");
    int k = std::stoi(s_.substr(start, pos_ - start));
    if (k > 64) fail("exponent too large");
    NCPolynomial r = poly_scalar(1.0);
    for (int i = 0; i < k; ++i) r = poly_mul(r, base);
    return r;
  }

  int index() {
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected an index");
    int v = std::stoi(s_.substr(start, pos_ - start));
    if (v < 1) fail("matrix-unit indices start at 1");
    return v;
  }

  NCPolynomial atom() {
    skip();
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NCPolynomial p = expr();
      if (!peek(')')) fail("expected ')'");
      ++pos_;
      return p;
    }
    if (c == 'a') {
      ++pos_;
      NCPolynomial p;
      p.terms[{Generator{}}] = 1.0;
      return p;
    }
    if (c == 'e') {
      ++pos_;
      int s, t;
      if (pos_ < s_.size() && s_[pos_] == '(') {
        ++pos_;
        s = index();
        if (!peek(',')) fail("expected ','");
        ++pos_;
        t = index();
        if (!peek(')')) fail("expected ')'");
        ++pos_;
      } else {
        if (pos_ + 2 > s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_])) ||
            !std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))
          fail("matrix unit needs two digits, e.g. e12, or e(s,t)");
        s = s_[pos_] - '0';
        t = s_[pos_ + 1] - '0';
        pos_ += 2;
        if (s < 1 || t < 1) fail("matrix-unit indices start at 1");
      }
      NCPolynomial p;
      p.terms[{Generator{s, t}}] = 1.0;
      return p;
    }
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(s_.substr(pos_), &used);
    } catch (const std::exception&) {
      fail("expected a number");
    }
    pos_ += used;
    return poly_scalar(v);
  }

  std::string s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline NCPolynomial parse_word(const std::string& text) {
  if (text.find_first_not_of(" \t") == std::string::npos) throw ParseError("empty word");
  return detail::WordParser(text).parse();
}

/// Letters of a monomial: runs of `a` become powers, runs of matrix units
/// their product (n0 x n0).
template <class S = double>
NCWord<S> to_word(const Monomial& m, int n0) {
  NCWord<S> w;
  for (const auto& g : m) {
    Letter<S> l;
    if (g.is_a()) {
      l = {0, Polynomial<S>::monomial(1)};
    } else {
      l = {1, MatrixUnitElement<S>::unit_matrix(n0, g.s, g.t)};
    }
    if (!w.empty() && w.back().tag == l.tag)
      w.back().element = multiply(w.back().element, l.element);
    else
      w.push_back(std::move(l));
  }
  return w;
}

/// (phi, phi') of a linear combination of words.
template <class S = double>
std::pair<S, S> evaluate(const NCPolynomial& p, const InfinitesimalState<S>& state_a,
                         const InfinitesimalState<S>& state_e) {
  if (p.max_unit_index() > state_e.n0) throw DomainError("word uses matrix units beyond N0");
  S phi(0), phi_prime(0);
  for (const auto& [mono, c] : p.terms) {
    auto [x, y] = infinitesimal_moment(to_word<S>(mono, state_e.n0), state_a, state_e);
    phi += S(c) * x;
    phi_prime += S(c) * y;
  }
  return {phi, phi_prime};
}

// --- base laws ---------------------------------------------------------------

/// Moments of the GOE first-order correction sigma, in closed form:
/// int t^{2m} dsigma = 2^{m-1} (1 - C(2m, m) / 4^m), odd moments vanish.
inline double goe_sigma_moment(int k) {
  if (k < 0) throw DomainError("negative moment degree");
  if (k % 2) return 0.0;
  int m = k / 2;
  double central = 1.0;  // C(2m, m) / 4^m
  for (int i = 1; i <= m; ++i) central *= (2.0 * i - 1.0) / (2.0 * i);
  return std::ldexp(1.0 - central, m - 1);
}

/// State on A with phi = moments of `tau` and phi' = moments of `tau_prime`
/// (zero when absent), up to the given degree.
inline InfinitesimalState<double> measure_state(const Measure& tau, int max_degree = kDefaultMaxMomentDegree,
                                                const SignedMeasure* tau_prime = nullptr) {
  std::vector<double> phi, phi_prime;
  for (int k = 0; k <= max_degree; ++k) {
    phi.push_back(k == 0 ? 1.0 : moment(tau, k, max_degree));
    phi_prime.push_back(k == 0 || !tau_prime ? 0.0 : moment(*tau_prime, k, max_degree));
  }
  return polynomial_state(std::move(phi), std::move(phi_prime));
}

/// GOE limit: semicircle moments with the sigma correction as phi'.
inline InfinitesimalState<double> goe_state(int max_degree = kDefaultMaxMomentDegree) {
  InfinitesimalState<double> st = measure_state(Measure::semicircle(), max_degree);
  for (int k = 1; k <= max_degree; ++k) st.phi_prime_moments[static_cast<std::size_t>(k)] = goe_sigma_moment(k);
  return st;
}

/// First-order prediction phi + phi'/N of E (1/N) Tr(word).
inline double predict_mixed_moment(const NCPolynomial& word, const InfinitesimalState<double>& base_state,
                                   const InfinitesimalState<double>& spike_state, int n) {
  if (n < spike_state.n0) throw DomainError("N smaller than N0");
  auto [phi, phi_prime] = evaluate(word, base_state, spike_state);
  return phi + phi_prime / n;
}

inline double predict_mixed_moment(const NCPolynomial& word, const Measure& base_tau,
                                   const InfinitesimalState<double>& spike_state, int n) {
  return predict_mixed_moment(word, measure_state(base_tau), spike_state, n);
}

// --- Monte Carlo evaluation ----------------------------------------------------

namespace detail {

// (1/N) Tr of every monomial of p on one sample, `a` = A and e_st = matrix units.
inline double normalized_trace(const NCPolynomial& p, const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  const int n0 = p.max_unit_index();
  if (n0 > n) throw DomainError("matrix-unit index exceeds N");
  const int kmax = p.max_a_degree();
  // cols[k] = first n0 columns of A^k
  std::vector<Matrix> cols;
  if (n0 > 0) {
    cols.push_back(Matrix::Identity(n, n0));
    for (int k = 1; k <= kmax; ++k) cols.push_back(a * cols.back());
  }
  std::map<int, double> pure;  // (1/N) Tr A^k
  double total = 0.0;
  for (const auto& [mono, c] : p.terms) {
    auto first_unit = std::find_if(mono.begin(), mono.end(), [](const Generator& g) { return !g.is_a(); });
    if (first_unit == mono.end()) {
      int k = static_cast<int>(mono.size());
      auto it = pure.find(k);
      if (it == pure.end()) it = pure.emplace(k, normalized_trace_power(a, k)).first;
      total += c * it->second;
      continue;
    }
    // rotate to start at a matrix unit: e_{s1 t1} A^{k1} e_{s2 t2} A^{k2} ...
    Monomial m(first_unit, mono.end());
    m.insert(m.end(), mono.begin(), first_unit);
    std::vector<std::pair<Generator, int>> blocks;
    for (const auto& g : m) {
      if (g.is_a())
        ++blocks.back().second;
      else
        blocks.push_back({g, 0});
    }
    std::complex<double> prod(1.0, 0.0);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const Generator& cur = blocks[i].first;
      const Generator& next = blocks[(i + 1) % blocks.size()].first;
      prod *= cols[static_cast<std::size_t>(blocks[i].second)](cur.t - 1, next.s - 1);
      if (prod == 0.0) break;
    }
    total += c * prod.real() / n;
  }
  return total;
}

}  // namespace detail

struct MomentComparison {
  double predicted = 0.0;        ///< phi + phi'/N
  double phi = 0.0;
  double phi_prime = 0.0;
  double mc_mean = 0.0;          ///< Monte Carlo E (1/N) Tr(word)
  double mc_stderr = 0.0;
  double mc_phi_prime = 0.0;     ///< N (mc_mean - phi)
  double mc_phi_prime_stderr = 0.0;
  double tolerance = 0.0;        ///< max(3 stderr, 5 / N^2)
  bool pass = false;
};

/// Monte Carlo E (1/N) Tr(word) with `a` the sampled matrix.
inline MeanEstimate mc_word_moment(const NCPolynomial& word, const EnsembleSpec& spec) {
  if (word.max_unit_index() > spec.n) throw DomainError("matrix-unit index exceeds N");
  return mean_and_stderr(
      map_trials(spec, [&](const Matrix& a, std::uint64_t) { return detail::normalized_trace(word, a); }));
}

inline MomentComparison compare_moment(const NCPolynomial& word, const EnsembleSpec& spec,
                                       const InfinitesimalState<double>& base_state) {
  const int n0 = std::max(1, word.max_unit_index());
  InfinitesimalState<double> spike_state = finite_rank_state(n0);
  MomentComparison r;
  std::tie(r.phi, r.phi_prime) = evaluate(word, base_state, spike_state);
  r.predicted = r.phi + r.phi_prime / spec.n;
  MeanEstimate e = mc_word_moment(word, spec);
  r.mc_mean = e.mean;
  r.mc_stderr = e.stderr_;
  r.mc_phi_prime = spec.n * (e.mean - r.phi);
  r.mc_phi_prime_stderr = spec.n * e.stderr_;
  r.tolerance = std::max(3.0 * e.stderr_, 5.0 / (static_cast<double>(spec.n) * spec.n));
  r.pass = std::abs(r.mc_mean - r.predicted) <= r.tolerance;
  return r;
}

}  // namespace typeb
