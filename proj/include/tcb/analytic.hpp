#pragma once

// Scalar functions of the factorized propagator, evaluated at real time t
// with λ = −it and x = λδ:
//   f(t)   = (e^{−itδ} − 1)/δ                  interaction amplitude
//   K₁(t)  = i(−tδ cos tδ + sin tδ)/δ²
//   K₂, ζ, K₃ = −2K₂ + ζ                        disentangling coefficients
//   M(t)   pure imaginary double series
//   G(t)   = −2K₁ + M = K₃ − |f|²/2             back-action exponent
//   A(t)   = i g² dG/dt                         real back-action rate
//   ε(t)   = A(t) S(S+1)
//
// The series are written with a_n = λⁿδ^{n−1}/n! and b_n = conj(a_n), so no
// term divides by δ and δ → 0 needs no special casing. Sums run in long
// double and stop once two consecutive terms fall below series_tol times the
// running sum, after the terms have started to decrease.

#include <cmath>
#include <complex>
#include <string>

#include "tcb/algebra.hpp"
#include "tcb/config.hpp"

namespace tcb {

struct KFunctions {
  cplx k1, k2, zeta, k3;
};

struct BackActionKernel {
  double delta = 0.0;
  double g = 1.0;
  double s = 1.0;
  double series_tol = 1e-15;
  double resonance_threshold = 1e-8;  // |δt| below this uses the δ-expansion of f
  int series_cap = 200;

  /// Kernel in the gS = 1 convention unless gs is given.
  static BackActionKernel large_s(double delta, double s, double gs = 1.0) {
    BackActionKernel k;
    k.delta = delta;
    k.s = s;
    k.g = gs / s;
    k.validate();
    return k;
  }

  void validate() const {
    if (!std::isfinite(delta) || !std::isfinite(g) || !std::isfinite(s))
      throw InvalidArgument("BackActionKernel: non-finite parameter");
    if (!(series_tol > 0.0)) throw InvalidArgument("BackActionKernel: series_tol must be positive");
    if (!(resonance_threshold >= 0.0)) throw InvalidArgument("BackActionKernel: resonance_threshold must be >= 0");
    if (series_cap < 4) throw InvalidArgument("BackActionKernel: series_cap too small");
  }

  cplx f(double t) const {
    check_time(t);
    const double tau = t * delta;
    if (std::abs(tau) < resonance_threshold) return cplx{0.0, -t} * (1.0 - cplx{0.0, tau / 2.0});
    const double half = std::sin(tau / 2.0);
    return cplx{-2.0 * half * half, -std::sin(tau)} / delta;
  }

  /// K₁ by its closed form, or by its defining odd series when |tδ| < 1
  /// where the closed form loses digits to cancellation.
  cplx k1(double t) const {
    check_time(t);
    const double tau = t * delta;
    if (std::abs(tau) >= 1.0) return cplx{0.0, (-tau * std::cos(tau) + std::sin(tau)) / (delta * delta)};
    // −i Σ_{m≥1} (−1)^m 2m/(2m+1)! t^{2m+1} δ^{2m−1}
    long double term = static_cast<long double>(t) * t * t * delta / 6.0L;  // m = 1 magnitude with sign
    long double sum = 0.0L;
    for (int m = 1; m <= series_cap; ++m) {
      const long double contrib = term * (2.0L * m);
      sum += (m % 2 == 1 ? -contrib : contrib);
      if (std::abs(contrib) <= 1e-21L * std::abs(sum) || contrib == 0.0L) break;
      term *= static_cast<long double>(tau) * tau / ((2.0L * m + 2.0L) * (2.0L * m + 3.0L));
    }
    return cplx{0.0, static_cast<double>(-sum)};
  }

  KFunctions k_functions(double t) const {
    check_time(t);
    KFunctions out;
    out.k1 = k1(t);
    const lcplx lam(0.0L, -static_cast<long double>(t));
    // K₂ = K₁ − ¼ Σ_{n≥1} (−1)ⁿ a_n²
    lcplx a = lam, sq_sum = 0.0L;
    run_series([&](int n) {
      if (n > 1) a *= lam * static_cast<long double>(delta) / static_cast<long double>(n);
      const lcplx term = (n % 2 == 0 ? 1.0L : -1.0L) * a * a;
      sq_sum += term;
      return std::pair{term, sq_sum};
    }, t);
    out.k2 = out.k1 - to_cplx(sq_sum / 4.0L);
    // ζ = Σ_{ℓ≥2} b_ℓ A_{ℓ−1}
    lcplx al = lam, partial = lam, zeta = 0.0L;
    run_series([&](int l) {
      al *= lam * static_cast<long double>(delta) / static_cast<long double>(l + 1);  // a_{ℓ+1}
      const lcplx term = std::conj(al) * partial;                                  // b_{ℓ+1} A_ℓ
      zeta += term;
      partial += al;
      return std::pair{term, zeta};
    }, t);
    out.zeta = to_cplx(zeta);
    out.k3 = -2.0 * out.k2 + out.zeta;
    return out;
  }

  /// M = −½ Σ_{n≥2} a_n B_{n−1} + ½ Σ_{ℓ≥2} b_ℓ A_{ℓ−1} = −i Im P.
  cplx M(double t) const { return {0.0, -static_cast<double>(p_sum(t).value.imag())}; }

  cplx G(double t) const { return -2.0 * k1(t) + M(t); }

  /// A = i g² dG/dt = g² (2t sin tδ + Im P′), differentiated term by term.
  double A(double t) const {
    check_time(t);
    const auto p = p_sum(t);
    return g * g * (2.0 * t * std::sin(t * delta) + static_cast<double>(p.derivative.imag()));
  }

  double epsilon(double t) const { return A(t) * s * (s + 1.0); }

 private:
  using lcplx = std::complex<long double>;

  static cplx to_cplx(lcplx z) { return {static_cast<double>(z.real()), static_cast<double>(z.imag())}; }

  static void check_time(double t) {
    if (!std::isfinite(t)) throw InvalidArgument("BackActionKernel: t must be finite");
  }

  // Drives a series whose n-th step returns (term, running sum). Terms may
  // grow while n < |tδ|; only after that do two consecutive small terms end it.
  template <class Step>
  void run_series(Step step, double t) const {
    const double growth = std::abs(t * delta);
    int small_run = 0;
    for (int n = 1; n <= series_cap; ++n) {
      const auto [term, sum] = step(n);
      const bool small = std::abs(term) <= static_cast<long double>(series_tol) * std::abs(sum);
      small_run = small ? small_run + 1 : 0;
      if (small_run >= 2 && n > growth + 1.0) return;
    }
    throw NumericalFailure("BackActionKernel: series did not converge within " + std::to_string(series_cap) +
                           " terms");
  }

  struct PSum {
    lcplx value = 0.0L;       // Σ_{n≥2} a_n B_{n−1}
    lcplx derivative = 0.0L;  // d/dt of the same sum
  };

  PSum p_sum(double t) const {
    check_time(t);
    const lcplx lam(0.0L, -static_cast<long double>(t));
    const lcplx x = lam * static_cast<long double>(delta);
    // a_1 = λ, a′_1 = −i; B_1 = λ*, B′_1 = +i
    lcplx a = lam, da(0.0L, -1.0L);
    lcplx big_b = std::conj(lam), big_db(0.0L, 1.0L);
    PSum out;
    lcplx x_pow = 1.0L;  // x^{n−1}/(n−1)!
    run_series([&](int k) {
      const int n = k + 1;
      a *= lam * static_cast<long double>(delta) / static_cast<long double>(n);
      x_pow *= x / static_cast<long double>(n - 1);
      da = lcplx(0.0L, -1.0L) * x_pow;
      const lcplx term = a * big_b;
      const lcplx dterm = da * big_b + a * big_db;
      out.value += term;
      out.derivative += dterm;
      big_b += std::conj(a);
      big_db += std::conj(da);
      // converge on whichever sum is slower
      const long double rel_v = std::abs(term) / std::max(std::abs(out.value), 1e-300L);
      const long double rel_d = std::abs(dterm) / std::max(std::abs(out.derivative), 1e-300L);
      if (out.value == 0.0L && out.derivative == 0.0L) return std::pair{lcplx(0.0L), lcplx(1.0L)};
      return rel_v > rel_d ? std::pair{term, out.value} : std::pair{dterm, out.derivative};
    }, t);
    return out;
  }
};

}  // namespace tcb
