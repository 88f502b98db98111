#include <catch2/catch_amalgamated.hpp>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <random>

#include "tcb/analytic.hpp"
#include "test_support.hpp"

using namespace tcb;

namespace {

using Big = boost::multiprecision::cpp_bin_float_50;

// Minimal complex arithmetic over 50-digit floats for the series oracles.
struct BigC {
  Big re = 0, im = 0;
  BigC operator+(const BigC& o) const { return {re + o.re, im + o.im}; }
  BigC operator-(const BigC& o) const { return {re - o.re, im - o.im}; }
  BigC operator*(const BigC& o) const { return {re * o.re - im * o.im, re * o.im + im * o.re}; }
  BigC operator*(const Big& s) const { return {re * s, im * s}; }
  BigC conj() const { return {re, -im}; }
  cplx to_cplx() const { return {static_cast<double>(re), static_cast<double>(im)}; }
};

// p[n] = zⁿ/n! for n = 0..count
std::vector<BigC> scaled_powers(const BigC& z, int count) {
  std::vector<BigC> p(static_cast<std::size_t>(count) + 1);
  p[0] = {1, 0};
  for (int n = 1; n <= count; ++n) p[static_cast<std::size_t>(n)] = p[static_cast<std::size_t>(n) - 1] * z * (Big(1) / n);
  return p;
}

// M in its original form, before the first and third terms are cancelled:
//   −1/(2δ²) Σ_{n≥1} xⁿ/n! Σ_{ℓ≥1, ℓ≠n} x*^ℓ/ℓ! + 1/δ² Σ_{ℓ≥2} x*^ℓ/ℓ! Σ_{1≤j<ℓ} x^j/j!
cplx brute_force_M(double delta, double t, int n_terms = 60) {
  const Big d(delta);
  const BigC x{0, -Big(t) * d};
  const auto px = scaled_powers(x, n_terms);
  const auto pxc = scaled_powers(x.conj(), n_terms);
  BigC first{0, 0}, second{0, 0};
  for (int n = 1; n <= n_terms; ++n)
    for (int l = 1; l <= n_terms; ++l)
      if (l != n) first = first + px[static_cast<std::size_t>(n)] * pxc[static_cast<std::size_t>(l)];
  for (int l = 2; l <= n_terms; ++l)
    for (int j = 1; j < l; ++j) second = second + pxc[static_cast<std::size_t>(l)] * px[static_cast<std::size_t>(j)];
  const Big inv = Big(1) / (d * d);
  return (first * (-inv / 2) + second * inv).to_cplx();
}

// G from the explicit pure-imaginary formula written in terms of real time:
//   i{ −1/δ² [ −2tδ cos tδ + 2 sin tδ + Im Σ_{n≥2} (−itδ)ⁿ/n! Σ_{1≤ℓ<n} (itδ)^ℓ/ℓ! ] }
cplx explicit_G(double delta, double t, int n_terms = 80) {
  const Big d(delta), tau = Big(t) * d;
  const auto pm = scaled_powers(BigC{0, -tau}, n_terms);
  const auto pp = scaled_powers(BigC{0, tau}, n_terms);
  BigC dbl{0, 0};
  for (int n = 2; n <= n_terms; ++n)
    for (int l = 1; l < n; ++l) dbl = dbl + pm[static_cast<std::size_t>(n)] * pp[static_cast<std::size_t>(l)];
  using boost::multiprecision::cos;
  using boost::multiprecision::sin;
  const Big bracket = -2 * tau * cos(tau) + 2 * sin(tau) + dbl.im;
  return {0.0, static_cast<double>(-bracket / (d * d))};
}

// K₁ from its defining series (1/δ²) Σ_{m≥1} 2m/(2m+1)! λ^{2m+1} δ^{2m+1}.
cplx series_K1(double delta, double t, int m_terms = 40) {
  const BigC x{0, -Big(t) * Big(delta)};
  const auto px = scaled_powers(x, 2 * m_terms + 1);
  BigC s{0, 0};
  for (int m = 1; m <= m_terms; ++m) s = s + px[static_cast<std::size_t>(2 * m + 1)] * Big(2 * m);
  const Big inv = Big(1) / (Big(delta) * Big(delta));
  return (s * inv).to_cplx();
}

BackActionKernel kernel(double delta, double s = 10.0) { return BackActionKernel::large_s(delta, s); }

}  // namespace

TEST_CASE("f") {
  CHECK(std::abs(kernel(0.0).f(2.0) - cplx{0.0, -2.0}) <= 1e-15);
  CHECK(kernel(-0.5).f(0.0) == cplx{0.0, 0.0});
  const cplx expected = (std::exp(cplx{0.0, 0.5}) - 1.0) / -0.5;
  CHECK(std::abs(kernel(-0.5).f(1.0) - expected) <= 1e-15);
  CHECK(expected.real() == Catch::Approx(0.24484).margin(1e-5));
  CHECK(expected.imag() == Catch::Approx(-0.95885).margin(1e-5));
  // the resonance branch joins the closed form smoothly
  const auto k = kernel(1e-10);
  CHECK(std::abs(k.f(3.0) - cplx{0.0, -3.0}) <= 1e-9);
  CHECK_THROWS_AS(kernel(0.1).f(std::nan("")), InvalidArgument);
}

TEST_CASE("K1 agrees with its defining series") {
  for (double t : {0.01, 0.5, 2.0, 5.0}) {
    const auto k = kernel(-0.5);
    INFO("t = " << t);
    CHECK(std::abs(k.k1(t) - series_K1(-0.5, t)) <= 1e-13 * std::max(1.0, std::abs(k.k1(t))));
  }
  // the closed form and series branches meet at |tδ| = 1
  const auto k = kernel(0.5);
  CHECK(std::abs(k.k1(1.999999) - k.k1(2.000001)) <= 1e-5);
  CHECK(kernel(0.0).k1(3.0) == cplx{0.0, 0.0});
}

TEST_CASE("k_functions at t = 0 are zero") {
  const auto kf = kernel(-0.5).k_functions(0.0);
  CHECK(kf.k1 == cplx{});
  CHECK(kf.k2 == cplx{});
  CHECK(kf.zeta == cplx{});
  CHECK(kf.k3 == cplx{});
}

TEST_CASE("K3 equals -2K1 + |f|^2/2 + M") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dd(-2.0, 2.0), dt(0.0, 6.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto k = kernel(dd(rng));
    const double t = dt(rng);
    const auto kf = k.k_functions(t);
    const cplx other = -2.0 * kf.k1 + 0.5 * std::norm(k.f(t)) + k.M(t);
    INFO("delta = " << k.delta << " t = " << t);
    CHECK(std::abs(kf.k3 - other) <= 1e-13 * std::max(1.0, std::abs(kf.k3)));
  }
}

TEST_CASE("M") {
  CHECK(kernel(-0.5).M(0.0) == cplx{});
  SECTION("pure imaginary") {
    for (double d : {-1.0, -0.5, 0.3})
      for (double t : {0.1, 1.0, 3.0}) {
        const cplx m = kernel(d).M(t);
        CHECK(std::abs(m.real()) <= 1e-13 * std::max(1.0, std::abs(m)));
        // the oracle form keeps the real parts that cancel analytically
        const cplx oracle = brute_force_M(d, t);
        CHECK(std::abs(oracle.real()) <= 1e-13 * std::max(1.0, std::abs(oracle)));
      }
  }
  SECTION("matches the brute-force double sum") {
    const cplx oracle = brute_force_M(-0.5, 1.0);
    CHECK(std::abs(kernel(-0.5).M(1.0) - oracle) <= 1e-13 * std::max(1.0, std::abs(oracle)));
    for (double t : {0.2, 2.0, 4.0}) {
      const cplx o = brute_force_M(0.7, t);
      CHECK(std::abs(kernel(0.7).M(t) - o) <= 1e-13 * std::max(1.0, std::abs(o)));
    }
  }
}

TEST_CASE("G") {
  SECTION("vanishes at resonance and at t = 0") {
    for (double t : {0.0, 0.5, 3.0, 10.0}) CHECK(kernel(0.0).G(t) == cplx{});
    CHECK(kernel(-0.5).G(0.0) == cplx{});
  }
  SECTION("matches the explicit real-time formula") {
    const cplx oracle = explicit_G(-0.5, 2.0);
    const cplx g = kernel(-0.5).G(2.0);
    CHECK(std::abs(g - oracle) <= 1e-13 * std::max(1.0, std::abs(oracle)));
    CHECK(g.imag() == Catch::Approx(0.22523).margin(1e-5));
    for (double d : {-1.3, -0.1, 0.4})
      for (double t : {0.05, 1.0, 3.5}) {
        const cplx o = explicit_G(d, t);
        CHECK(std::abs(kernel(d).G(t) - o) <= 1e-13 * std::max(1.0, std::abs(o)));
      }
  }
  SECTION("independent of g and S, pure imaginary") {
    const cplx a = BackActionKernel::large_s(-0.5, 3.0).G(1.7);
    const cplx b = BackActionKernel::large_s(-0.5, 40.0, 2.0).G(1.7);
    CHECK(a == b);
    CHECK(a.real() == 0.0);
  }
  SECTION("small-t behaviour -i t^3 delta / 6") {
    const double t = 1e-3, d = -0.5;
    CHECK(kernel(d).G(t).imag() == Catch::Approx(-t * t * t * d / 6.0).epsilon(1e-5));
  }
}

TEST_CASE("A") {
  SECTION("zero at resonance and at t = 0") {
    for (double t : {0.0, 1.0, 4.0}) CHECK(kernel(0.0).A(t) == 0.0);
    CHECK(kernel(-0.5).A(0.0) == 0.0);
  }
  SECTION("odd in delta") {
    for (double d : {0.1, 0.5, 1.2})
      for (double t : {0.3, 1.0, 2.5}) CHECK(std::abs(kernel(d).A(t) + kernel(-d).A(t)) <= 1e-15);
  }
  SECTION("central finite difference of i g^2 G") {
    const auto k = kernel(-0.5);
    const double t = 1.5, eps = 1e-6;
    const cplx fd = cplx{0.0, 1.0} * k.g * k.g * (k.G(t + eps) - k.G(t - eps)) / (2.0 * eps);
    CHECK(std::abs(fd.imag()) <= 1e-12);
    CHECK(std::abs(k.A(t) - fd.real()) <= 1e-6 * std::abs(k.A(t)));
    CHECK(k.A(t) * k.s * k.s == Catch::Approx(-0.2148476).margin(1e-6));
  }
  SECTION("small-t law A = c t^2 + O(t^4)") {
    const auto k = kernel(-0.5);
    std::vector<double> ts, as;
    for (double t = 1e-3; t <= 1.0001e-2; t += 1e-3) {
      ts.push_back(t);
      as.push_back(k.A(t));
    }
    double num = 0, den = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      num += as[i] * ts[i] * ts[i];
      den += std::pow(ts[i], 4);
    }
    const double c = num / den;
    CHECK(c == Catch::Approx(k.g * k.g * k.delta / 2.0).epsilon(1e-4));
    for (std::size_t i = 0; i < ts.size(); ++i) CHECK(std::abs(as[i] - c * ts[i] * ts[i]) <= 10.0 * k.g * k.g * std::pow(ts[i], 4));
  }
}

TEST_CASE("A phenomenology") {
  auto first_root = [](const BackActionKernel& k) {
    double prev = k.A(0.01);
    for (double t = 0.02; t <= 6.0; t += 0.01) {
      const double cur = k.A(t);
      if ((prev < 0) != (cur < 0)) {
        double lo = t - 0.01, hi = t;
        for (int i = 0; i < 60; ++i) {
          const double mid = 0.5 * (lo + hi);
          ((k.A(lo) < 0) == (k.A(mid) < 0) ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
      }
      prev = cur;
    }
    return std::nan("");
  };
  SECTION("first sign change for delta = -0.5 lies in [1, 4]") {
    const double root = first_root(kernel(-0.5));
    CHECK(root >= 1.0);
    CHECK(root <= 4.0);
    // regression value of this implementation
    CHECK(root == Catch::Approx(1.898837).margin(1e-5));
  }
  SECTION("smaller detuning has the deeper minimum in the valid window") {
    auto window_min = [](const BackActionKernel& k) {
      double m = 0.0;
      for (double t = 0.0; t <= k.s / 4.0; t += 0.005) m = std::min(m, k.A(t));
      return m;
    };
    CHECK(window_min(kernel(-0.1)) < window_min(kernel(-0.5)));
  }
  SECTION("|A| decreases with S at fixed gS") {
    double prev = std::numeric_limits<double>::infinity();
    for (double s : {3.0, 5.0, 10.0, 20.0}) {
      const double a = std::abs(kernel(-0.5, s).A(1.0));
      CHECK(a < prev);
      prev = a;
    }
    CHECK(std::abs(kernel(-0.5, 10.0).A(1.0)) == Catch::Approx(0.00182).margin(1e-5));
  }
}

TEST_CASE("epsilon") {
  const auto k = kernel(-0.5, 10.0);
  CHECK(kernel(0.0, 10.0).epsilon(2.0) == 0.0);
  CHECK(k.epsilon(1.2) == Catch::Approx(110.0 * k.A(1.2)).epsilon(1e-15));
}

TEST_CASE("kernel validation") {
  BackActionKernel k;
  k.series_tol = 0.0;
  CHECK_THROWS_AS(k.validate(), InvalidArgument);
  BackActionKernel tiny;
  tiny.delta = 3.0;
  tiny.series_cap = 10;
  CHECK_THROWS_AS(tiny.G(20.0), NumericalFailure);
}
