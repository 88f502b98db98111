#pragma once

// Symbolic normal-ordered operator algebra over {a†, a, S⁺, Sᶻ, S⁻}, the
// left-oriented Zassenhaus recursion and the large-S pruning rule.
//
// A monomial is c · g^p · a†^i a^j S⁺^k (Sᶻ)^l S⁻^m. Its coefficient c is a
// polynomial in the symbols δ and ω with exact Gaussian-rational entries,
// so X = ω a†a + (ω+δ) Sᶻ and Y = g(aS⁺ + a†S⁻) can be kept symbolic and
// identities such as ad_X Y = δȲ hold as exact equalities.

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <complex>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tcb/algebra.hpp"
#include "tcb/config.hpp"
#include "tcb/hilbert.hpp"
#include "tcb/model.hpp"

namespace tcb {

using Rational = boost::multiprecision::cpp_rational;

struct GaussianRational {
  Rational re{0};
  Rational im{0};

  bool is_zero() const { return re == 0 && im == 0; }
  friend bool operator==(const GaussianRational&, const GaussianRational&) = default;
  GaussianRational operator-() const { return {-re, -im}; }
  GaussianRational& operator+=(const GaussianRational& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  friend GaussianRational operator*(const GaussianRational& a, const GaussianRational& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  cplx to_complex() const { return {static_cast<double>(re), static_cast<double>(im)}; }
};

/// Polynomial in (δ, ω) with Gaussian-rational coefficients.
class SymbolicCoeff {
 public:
  using Powers = std::pair<int, int>;  // (power of δ, power of ω)

  SymbolicCoeff() = default;
  SymbolicCoeff(Rational r) { add(Powers{0, 0}, {std::move(r), 0}); }  // NOLINT: implicit by design
  SymbolicCoeff(int r) : SymbolicCoeff(Rational(r)) {}                    // NOLINT

  static SymbolicCoeff monomial(GaussianRational c, int delta_power, int omega_power) {
    SymbolicCoeff s;
    s.add({delta_power, omega_power}, std::move(c));
    return s;
  }
  static SymbolicCoeff delta() { return monomial({1, 0}, 1, 0); }
  static SymbolicCoeff omega() { return monomial({1, 0}, 0, 1); }
  static SymbolicCoeff imag_unit() { return monomial({0, 1}, 0, 0); }

  bool is_zero() const { return terms_.empty(); }
  const std::map<Powers, GaussianRational>& terms() const { return terms_; }

  void add(const Powers& pw, const GaussianRational& c) {
    if (c.is_zero()) return;
    auto [it, inserted] = terms_.try_emplace(pw, c);
    if (!inserted) {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  SymbolicCoeff& operator+=(const SymbolicCoeff& o) {
    for (const auto& [pw, c] : o.terms_) add(pw, c);
    return *this;
  }
  SymbolicCoeff operator-() const {
    SymbolicCoeff r;
    for (const auto& [pw, c] : terms_) r.terms_.emplace(pw, -c);
    return r;
  }
  friend SymbolicCoeff operator+(SymbolicCoeff a, const SymbolicCoeff& b) { return a += b; }
  friend SymbolicCoeff operator-(SymbolicCoeff a, const SymbolicCoeff& b) { return a += -b; }
  friend SymbolicCoeff operator*(const SymbolicCoeff& a, const SymbolicCoeff& b) {
    SymbolicCoeff r;
    for (const auto& [pa, ca] : a.terms_)
      for (const auto& [pb, cb] : b.terms_) r.add({pa.first + pb.first, pa.second + pb.second}, ca * cb);
    return r;
  }
  friend bool operator==(const SymbolicCoeff&, const SymbolicCoeff&) = default;

  cplx evaluate(double delta_value, double omega_value) const {
    cplx s = 0.0;
    for (const auto& [pw, c] : terms_)
      s += c.to_complex() * std::pow(delta_value, pw.first) * std::pow(omega_value, pw.second);
    return s;
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [pw, c] : terms_) {
      if (!first) os << " + ";
      first = false;
      os << '(';
      if (c.im == 0) {
        os << c.re;
      } else if (c.re == 0) {
        os << c.im << "i";
      } else {
        os << c.re << (c.im < 0 ? " - " : " + ") << abs(c.im) << "i";
      }
      os << ')';
      if (pw.first > 0) os << "·δ" << (pw.first > 1 ? "^" + std::to_string(pw.first) : "");
      if (pw.second > 0) os << "·ω" << (pw.second > 1 ? "^" + std::to_string(pw.second) : "");
    }
    return os.str();
  }

 private:
  std::map<Powers, GaussianRational> terms_;
};

/// Exponents of a normal-ordered product a†^adag a^a S⁺^splus (Sᶻ)^sz S⁻^sminus
/// together with the power of the coupling g it carries.
struct MonomialKey {
  int adag = 0, a = 0, splus = 0, sz = 0, sminus = 0;
  int g_power = 0;

  int spin_order() const { return splus + sz + sminus; }
  int boson_order() const { return adag + a; }
  friend auto operator<=>(const MonomialKey&, const MonomialKey&) = default;
};

enum class Generator { adag, a, splus, sz, sminus };

inline const char* generator_label(Generator gen) {
  switch (gen) {
    case Generator::adag: return "a†";
    case Generator::a: return "a";
    case Generator::splus: return "S+";
    case Generator::sz: return "Sz";
    case Generator::sminus: return "S-";
  }
  return "?";
}

struct Monomial {
  SymbolicCoeff coeff;
  MonomialKey key;

  int g_power() const { return key.g_power; }
  int spin_order() const { return key.spin_order(); }

  /// Factor labels in normal order: bosons (a† before a), then S⁺, Sᶻ, S⁻.
  std::vector<Generator> factors() const {
    std::vector<Generator> f;
    f.insert(f.end(), key.adag, Generator::adag);
    f.insert(f.end(), key.a, Generator::a);
    f.insert(f.end(), key.splus, Generator::splus);
    f.insert(f.end(), key.sz, Generator::sz);
    f.insert(f.end(), key.sminus, Generator::sminus);
    return f;
  }
};

namespace detail {

inline Rational binomial(int n, int k) {
  Rational r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline Rational factorial(int n) {
  Rational r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

// Spin word S⁺^splus (Sᶻ)^sz S⁻^sminus with an integer-valued weight.
using SpinWord = std::tuple<int, int, int>;
using SpinSum = std::map<SpinWord, Rational>;

inline void accumulate(SpinSum& s, const SpinWord& w, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = s.try_emplace(w, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) s.erase(it);
  }
}

// Right multiplication of a normal-ordered spin sum by one generator, using
//   S⁻^β Sᶻ = (Sᶻ + β) S⁻^β,
//   S⁻^β S⁺ = S⁺ S⁻^β − (2βSᶻ + β² − β) S⁻^(β−1),
//   P(Sᶻ) S⁺ = S⁺ P(Sᶻ + 1).
inline SpinSum spin_times(const SpinSum& in, Generator gen) {
  SpinSum out;
  for (const auto& [w, c] : in) {
    const auto [alpha, k, beta] = w;
    switch (gen) {
      case Generator::sminus:
        accumulate(out, {alpha, k, beta + 1}, c);
        break;
      case Generator::sz:
        accumulate(out, {alpha, k + 1, beta}, c);
        accumulate(out, {alpha, k, beta}, c * beta);
        break;
      case Generator::splus:
        for (int i = 0; i <= k; ++i) accumulate(out, {alpha + 1, i, beta}, c * binomial(k, i));
        if (beta > 0) {
          accumulate(out, {alpha, k + 1, beta - 1}, -c * 2 * beta);
          accumulate(out, {alpha, k, beta - 1}, -c * (beta * beta - beta));
        }
        break;
      default:
        throw InvalidArgument("spin_times: not a spin generator");
    }
  }
  return out;
}

}  // namespace detail

/// Sum of monomials with like terms merged and zero terms removed.
class OperatorPoly {
 public:
  OperatorPoly() = default;

  static OperatorPoly term(const MonomialKey& key, SymbolicCoeff c = 1) {
    OperatorPoly p;
    p.add(key, c);
    return p;
  }
  static OperatorPoly identity() { return term(MonomialKey{}); }

  void add(const MonomialKey& key, const SymbolicCoeff& c) {
    if (c.is_zero()) return;
    auto [it, inserted] = terms_.try_emplace(key, c);
    if (!inserted) {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  const std::map<MonomialKey, SymbolicCoeff>& raw() const { return terms_; }

  std::vector<Monomial> monomials() const {
    std::vector<Monomial> out;
    out.reserve(terms_.size());
    for (const auto& [k, c] : terms_) out.push_back({c, k});
    return out;
  }

  OperatorPoly& operator+=(const OperatorPoly& o) {
    for (const auto& [k, c] : o.terms_) add(k, c);
    return *this;
  }
  OperatorPoly& operator-=(const OperatorPoly& o) {
    for (const auto& [k, c] : o.terms_) add(k, -c);
    return *this;
  }
  friend OperatorPoly operator+(OperatorPoly a, const OperatorPoly& b) { return a += b; }
  friend OperatorPoly operator-(OperatorPoly a, const OperatorPoly& b) { return a -= b; }
  friend OperatorPoly operator*(const SymbolicCoeff& s, const OperatorPoly& p) {
    OperatorPoly r;
    for (const auto& [k, c] : p.terms_) r.add(k, s * c);
    return r;
  }
  friend OperatorPoly operator*(const OperatorPoly& x, const OperatorPoly& y) {
    OperatorPoly r;
    for (const auto& [kx, cx] : x.terms_)
      for (const auto& [ky, cy] : y.terms_) multiply_into(r, kx, cx, ky, cy);
    return r;
  }
  friend bool operator==(const OperatorPoly&, const OperatorPoly&) = default;

  /// One monomial per line: `coeff * g^p * <labels>`.
  std::string dump() const {
    std::ostringstream os;
    for (const auto& m : monomials()) {
      os << m.coeff.to_string() << " * g^" << m.g_power() << " * <";
      const auto f = m.factors();
      if (f.empty()) os << "1";
      for (std::size_t i = 0; i < f.size(); ++i) os << (i ? " " : "") << generator_label(f[i]);
      os << ">\n";
    }
    return os.str();
  }

 private:
  static void multiply_into(OperatorPoly& r, const MonomialKey& kx, const SymbolicCoeff& cx, const MonomialKey& ky,
                            const SymbolicCoeff& cy) {
    // bosons: a^q a†^r = Σ_j C(q,j) C(r,j) j! a†^(r−j) a^(q−j)
    std::vector<std::pair<std::pair<int, int>, Rational>> bosons;
    for (int j = 0; j <= std::min(kx.a, ky.adag); ++j)
      bosons.push_back({{kx.adag + ky.adag - j, kx.a + ky.a - j},
                        detail::binomial(kx.a, j) * detail::binomial(ky.adag, j) * detail::factorial(j)});

    detail::SpinSum spins{{{kx.splus, kx.sz, kx.sminus}, Rational(1)}};
    for (int i = 0; i < ky.splus; ++i) spins = detail::spin_times(spins, Generator::splus);
    for (int i = 0; i < ky.sz; ++i) spins = detail::spin_times(spins, Generator::sz);
    for (int i = 0; i < ky.sminus; ++i) spins = detail::spin_times(spins, Generator::sminus);

    const SymbolicCoeff c = cx * cy;
    for (const auto& [bw, bc] : bosons)
      for (const auto& [sw, sc] : spins) {
        MonomialKey k{bw.first, bw.second, std::get<0>(sw), std::get<1>(sw), std::get<2>(sw),
                      kx.g_power + ky.g_power};
        r.add(k, SymbolicCoeff(bc * sc) * c);
      }
  }

  std::map<MonomialKey, SymbolicCoeff> terms_;
};

inline OperatorPoly commutator(const OperatorPoly& x, const OperatorPoly& y) { return x * y - y * x; }

/// [m1, m2] in normal order.
inline OperatorPoly normal_order_commute(const Monomial& m1, const Monomial& m2) {
  return commutator(OperatorPoly::term(m1.key, m1.coeff), OperatorPoly::term(m2.key, m2.coeff));
}

/// Drops every monomial carrying more powers of g than spin operators:
/// with gS held fixed such a term is suppressed by a power of 1/S.
inline OperatorPoly large_S_prune(const OperatorPoly& p) {
  OperatorPoly out;
  for (const auto& [k, c] : p.raw())
    if (k.g_power <= k.spin_order()) out.add(k, c);
  return out;
}

struct TCGenerators {
  OperatorPoly x, y, ybar, y_plus, y_minus;
};

/// X = ω a†a + (ω+δ) Sᶻ, Y = g(aS⁺ + a†S⁻), Ȳ = g(aS⁺ − a†S⁻), Y⁺ = g aS⁺, Y⁻ = g a†S⁻.
inline TCGenerators tc_generators() {
  TCGenerators gens;
  gens.x = OperatorPoly::term({.adag = 1, .a = 1}, SymbolicCoeff::omega()) +
           OperatorPoly::term({.sz = 1}, SymbolicCoeff::omega() + SymbolicCoeff::delta());
  gens.y_plus = OperatorPoly::term({.a = 1, .splus = 1, .g_power = 1});
  gens.y_minus = OperatorPoly::term({.adag = 1, .sminus = 1, .g_power = 1});
  gens.y = gens.y_plus + gens.y_minus;
  gens.ybar = gens.y_plus - gens.y_minus;
  return gens;
}

// ---------------------------------------------------------------------------
// Tuples and the recursion

using ZassenhausTuple = std::vector<int>;

inline constexpr int kZassenhausCap = 8;

/// All (i₀,…,i_n) with i₀ + i₁ + 2i₂ + … + n·i_n = n and partial sums
/// i₀ + i₁ + … + j·i_j ≥ j+1 for j < n, in lexicographic order. These index
/// the nested commutators that make up the order-(n+1) term.
inline std::vector<ZassenhausTuple> enumerate_tuples(int n, int cap = kZassenhausCap) {
  if (n < 1) throw InvalidArgument("enumerate_tuples: n must be at least 1");
  if (n > cap) throw LimitExceeded("enumerate_tuples: n exceeds the configured cap");
  std::vector<ZassenhausTuple> out;
  ZassenhausTuple cur(static_cast<std::size_t>(n) + 1, 0);
  auto weight = [](int j) { return j == 0 ? 1 : j; };
  // depth-first over positions in increasing j, values ascending, so the
  // output comes out lexicographically sorted
  auto rec = [&](auto&& self, int j, int partial) -> void {
    if (j > n) {
      if (partial == n) out.push_back(cur);
      return;
    }
    for (int v = 0; partial + v * weight(j) <= n; ++v) {
      const int next = partial + v * weight(j);
      if (j < n && next < j + 1) continue;
      cur[static_cast<std::size_t>(j)] = v;
      self(self, j + 1, next);
    }
    cur[static_cast<std::size_t>(j)] = 0;
  };
  rec(rec, 0, 0);
  return out;
}

inline OperatorPoly scale_by(const OperatorPoly& p, const Rational& r) { return SymbolicCoeff(r) * p; }
inline ComplexMatrix scale_by(const ComplexMatrix& m, const Rational& r) { return static_cast<double>(r) * m; }

/// Left-oriented terms C̃_1 … C̃_order of exp(X+Y) = … exp(C̃₃) exp(C̃₂) exp(Y) exp(X),
/// returned with index k holding C̃_k (index 0 holds X, index 1 holds Y).
///
/// The recursion runs on the right-oriented terms
///   C_{n+1} = 1/(n+1) Σ_tuples (−1)^{Σi}/∏ i_j! ad_{C_n}^{i_n} … ad_{C_1}^{i_1} ad_{C_0}^{i_0} Y,
/// with C₀ = X and C₁ = Y; the left-oriented terms follow from C̃_n = (−1)^{n+1} C_n.
/// Works for any type with commutator, +, and scale_by overloads.
template <class Op>
std::vector<Op> zassenhaus_terms(int order, const Op& x, const Op& y, int cap = kZassenhausCap) {
  if (order < 1) throw InvalidArgument("zassenhaus_terms: order must be at least 1");
  if (order > cap) throw LimitExceeded("zassenhaus_terms: order exceeds the configured cap");
  std::vector<Op> c{x, y};
  for (int n = 1; n + 1 <= order; ++n) {
    std::optional<Op> sum;
    for (const auto& tup : enumerate_tuples(n, cap)) {
      Op v = y;
      int total = 0;
      Rational denom = 1;
      for (int j = 0; j <= n; ++j) {
        const int reps = tup[static_cast<std::size_t>(j)];
        for (int r = 0; r < reps; ++r) v = commutator(c[static_cast<std::size_t>(j)], v);
        total += reps;
        denom *= detail::factorial(reps);
      }
      const Rational w = Rational(total % 2 == 0 ? 1 : -1) / (denom * (n + 1));
      Op term = scale_by(v, w);
      sum = sum ? *sum + term : term;
    }
    c.push_back(*sum);
  }
  // right-oriented to left-oriented
  for (int k = 2; k <= order; ++k)
    if ((k + 1) % 2 != 0) c[static_cast<std::size_t>(k)] = scale_by(c[static_cast<std::size_t>(k)], Rational(-1));
  return c;
}

/// C̃_n for the given generators.
inline OperatorPoly zassenhaus_term(int n, const OperatorPoly& x, const OperatorPoly& y, int cap = kZassenhausCap) {
  if (n < 1) throw InvalidArgument("zassenhaus_term: n must be at least 1");
  if (n == 1) return y;
  return zassenhaus_terms(n, x, y, cap)[static_cast<std::size_t>(n)];
}

// ---------------------------------------------------------------------------
// Closed forms of the surviving commutators

inline OperatorPoly ad_power(const OperatorPoly& x, int n, OperatorPoly y) {
  for (int i = 0; i < n; ++i) y = commutator(x, y);
  return y;
}

inline SymbolicCoeff delta_power(int n) { return SymbolicCoeff::monomial({1, 0}, n, 0); }

struct SurvivingForms {
  int n = 0;
  OperatorPoly closed_adx;   // gδⁿ(aS⁺ + (−1)ⁿ a†S⁻)
  OperatorPoly engine_adx;   // ad_Xⁿ Y, pruned
  bool match_adx = false;
  OperatorPoly closed_ady;   // −2g²δ^{n−1} S⁺S⁻ for even n, 0 for odd n
  OperatorPoly engine_ady;   // ad_Y ad_X^{n−1} Y, pruned
  bool match_ady = false;
  double numeric_residual = 0.0;  // materialized engine vs matrix commutators, unpruned

  bool match() const { return match_adx && match_ady; }
};


inline ComplexMatrix materialize(const OperatorPoly& p, const TCParams& params, const ProductSpace& sp);

/// Builds ad_Xⁿ Y and ad_Y ad_X^{n−1} Y with the engine, prunes them and
/// compares with the closed forms; the numeric residual checks the unpruned
/// engine output against nested matrix commutators on the states with
/// n ≤ n_max − n − 1, where truncation cannot reach.
inline SurvivingForms surviving_commutator_forms(int n, const TCParams& p, int cap = kZassenhausCap) {
  if (n < 1) throw InvalidArgument("surviving_commutator_forms: n must be at least 1");
  if (n > cap) throw LimitExceeded("surviving_commutator_forms: n exceeds the configured cap");
  const auto gens = tc_generators();
  SurvivingForms out;
  out.n = n;

  const auto adx_full = ad_power(gens.x, n, gens.y);
  const auto ady_full = commutator(gens.y, ad_power(gens.x, n - 1, gens.y));
  out.engine_adx = large_S_prune(adx_full);
  out.engine_ady = large_S_prune(ady_full);

  out.closed_adx = delta_power(n) * (n % 2 == 0 ? gens.y : gens.ybar);
  if (n % 2 == 0)
    out.closed_ady = (SymbolicCoeff(-2) * delta_power(n - 1)) *
                     OperatorPoly::term({.splus = 1, .sminus = 1, .g_power = 2});
  out.match_adx = out.engine_adx == out.closed_adx;
  out.match_ady = out.engine_ady == out.closed_ady;

  const auto sp = p.space();
  const auto x = build_X(p, sp);
  const auto y = build_Y(p, sp);
  ComplexMatrix adx = y;
  for (int i = 0; i < n; ++i) adx = commutator(x, adx);
  ComplexMatrix ady = y;
  for (int i = 0; i < n - 1; ++i) ady = commutator(x, ady);
  ady = commutator(y, ady);
  const int keep = p.n_max - n - 1;
  if (keep >= 0) {
    out.numeric_residual =
        std::max(frobenius_norm(restrict_to_low_fock(materialize(adx_full, p, sp) - adx, sp, keep)),
                 frobenius_norm(restrict_to_low_fock(materialize(ady_full, p, sp) - ady, sp, keep)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Materialization and numeric checks

/// Dense matrix of a symbolic polynomial, with δ, ω and g taken from the parameters.
inline ComplexMatrix materialize(const OperatorPoly& p, const TCParams& params, const ProductSpace& sp) {
  const auto b = boson_ops(sp.fock());
  const auto s = spin_ops(sp.spin());
  auto power = [](const ComplexMatrix& m, int k) {
    ComplexMatrix r = ComplexMatrix::identity(m.rows());
    for (int i = 0; i < k; ++i) r = r * m;
    return r;
  };
  ComplexMatrix out(sp.dim(), sp.dim());
  for (const auto& [k, c] : p.raw()) {
    const cplx coeff = c.evaluate(params.delta(), params.omega) * std::pow(params.g, k.g_power);
    const auto boson = power(b.adag, k.adag) * power(b.a, k.a);
    const auto spin = power(s.splus, k.splus) * power(s.sz, k.sz) * power(s.sminus, k.sminus);
    out += coeff * kron(boson, spin);
  }
  return out;
}

namespace detail {

using lcplx = std::complex<long double>;

// Minimal long-double dense matrix used where a residual of order λ⁴ must be
// resolved below double rounding.
struct LongMatrix {
  std::size_t n = 0;
  std::vector<lcplx> v;

  explicit LongMatrix(std::size_t dim) : n(dim), v(dim * dim) {}
  static LongMatrix identity(std::size_t dim) {
    LongMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m.v[i * dim + i] = 1.0L;
    return m;
  }
  static LongMatrix from(const ComplexMatrix& a, lcplx scale) {
    LongMatrix m(a.rows());
    for (std::size_t i = 0; i < a.entries().size(); ++i)
      m.v[i] = scale * lcplx(a.entries()[i].real(), a.entries()[i].imag());
    return m;
  }
  friend LongMatrix operator*(const LongMatrix& x, const LongMatrix& y) {
    LongMatrix r(x.n);
    for (std::size_t i = 0; i < x.n; ++i)
      for (std::size_t k = 0; k < x.n; ++k) {
        const lcplx xik = x.v[i * x.n + k];
        if (xik == 0.0L) continue;
        for (std::size_t j = 0; j < x.n; ++j) r.v[i * x.n + j] += xik * y.v[k * x.n + j];
      }
    return r;
  }
  long double norm() const {
    long double s = 0;
    for (const auto& z : v) s += std::norm(z);
    return std::sqrt(s);
  }
};

// exp(k) by scaling and squaring of a Taylor sum carried to long double precision.
inline LongMatrix expm_long(const LongMatrix& k) {
  const long double nrm = k.norm();
  int squarings = 0;
  while (nrm / std::ldexp(1.0L, squarings) > 0.25L) ++squarings;
  const long double scale = std::ldexp(1.0L, -squarings);
  LongMatrix sum = LongMatrix::identity(k.n), term = sum;
  for (int j = 1; j <= 30; ++j) {
    term = term * k;
    for (auto& z : term.v) z *= scale / static_cast<long double>(j);
    for (std::size_t i = 0; i < sum.v.size(); ++i) sum.v[i] += term.v[i];
    if (term.norm() <= 1e-22L * sum.norm()) break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

}  // namespace detail

/// ‖exp(λ(X+Y)) − exp(λ^k C̃_k) ⋯ exp(λ²C̃₂) exp(λY) exp(λX)‖_F with λ = −it,
/// using the matrix recursion on the truncated operators. Exponentials are
/// evaluated in long double so the residual is resolved well below 1e−16.
inline double zassenhaus_product_residual(const TCParams& p, double t, int order = 3) {
  const auto sp = p.space();
  const auto x = build_X(p, sp);
  const auto y = build_Y(p, sp);
  const auto terms = zassenhaus_terms(order, x, y);
  const detail::lcplx lambda(0.0L, -static_cast<long double>(t));

  const auto exact = detail::expm_long(detail::LongMatrix::from(x + y, lambda));
  auto product = detail::expm_long(detail::LongMatrix::from(x, lambda));
  detail::lcplx lam_k = lambda;
  for (int k = 1; k <= order; ++k) {
    if (k > 1) lam_k *= lambda;
    product = detail::expm_long(detail::LongMatrix::from(terms[static_cast<std::size_t>(k)], lam_k)) * product;
  }
  long double s = 0;
  for (std::size_t i = 0; i < exact.v.size(); ++i) s += std::norm(exact.v[i] - product.v[i]);
  return static_cast<double>(std::sqrt(s));
}

}  // namespace tcb
