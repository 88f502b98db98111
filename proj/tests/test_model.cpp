#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "tcb/model.hpp"

using namespace tcb;

namespace {
TCParams params(double omega, double h, double g, double s, int n_max) {
  TCParams p;
  p.omega = omega;
  p.h = h;
  p.g = g;
  p.spin = SpinSpace(s);
  p.n_max = n_max;
  return p;
}
}  // namespace

TEST_CASE("make_tc_params enforces gS = 1 by default") {
  const auto p = make_tc_params(-0.5, 10.0, 30);
  CHECK(p.gs() == 1.0);
  CHECK(p.g == 0.1);
  CHECK(p.delta() == Catch::Approx(-0.5).margin(1e-15));
  CHECK(make_tc_params(0.2, 4.0, 3, 1.0, 2.0).gs() == 2.0);
  CHECK_THROWS_AS(make_tc_params(0.0, 0.0, 3), InvalidArgument);
}

TEST_CASE("build_X is the diagonal ωn + hm") {
  const auto p = params(1.0, 1.0, 0.3, 0.5, 1);
  const auto x = build_X(p, p.space());
  const std::vector<double> expected{-0.5, 0.5, 0.5, 1.5};
  for (std::size_t i = 0; i < 4; ++i) CHECK(x(i, i).real() == expected[i]);
  CHECK(hermiticity_residual(x) == 0.0);
  CHECK_THROWS_AS(build_X(p, ProductSpace(SpinSpace(1.0), FockSpace(1))), InvalidArgument);
}

TEST_CASE("build_X at resonance is degenerate within each excitation block") {
  const auto p = params(1.3, 1.3, 0.2, 1.5, 4);
  const auto sp = p.space();
  const auto x = build_X(p, sp);
  for (const auto& b : excitation_blocks(sp))
    for (auto idx : b.indices) CHECK(x(idx, idx).real() == Catch::Approx(x(b.indices[0], b.indices[0]).real()));
}

TEST_CASE("build_Y and build_Ybar") {
  const auto p = params(1.0, 0.7, 2.0, 0.5, 1);
  const auto sp = p.space();
  const auto y = build_Y(p, sp);
  const auto yb = build_Ybar(p, sp);
  CHECK(hermiticity_residual(y) <= 1e-14);
  CHECK(frobenius_norm(yb + yb.adjoint()) <= 1e-14);
  // <n=0, m=+1/2| Y |n=1, m=-1/2> = g √1 · 1
  CHECK(y(sp.index(0, 1), sp.index(1, 0)).real() == Catch::Approx(2.0).epsilon(1e-15));
  const auto ops = lifted_ops(sp);
  CHECK(frobenius_distance(y + yb, 2.0 * p.g * (ops.a * ops.splus)) <= 1e-14);

  const auto n = excitation_operator(sp);
  CHECK(frobenius_norm(commutator(y, n)) <= 1e-14);
  CHECK(frobenius_norm(commutator(yb, n)) <= 1e-14);
}

TEST_CASE("build_H") {
  SECTION("g = 0 gives the free part") {
    const auto p = params(1.0, 0.4, 0.0, 2.0, 3);
    CHECK(frobenius_distance(build_H(p, p.space()), build_X(p, p.space())) == 0.0);
  }
  SECTION("conserves excitation number and is block diagonal") {
    const auto p = params(1.0, 0.6, 0.25, 2.0, 6);
    const auto sp = p.space();
    const auto h = build_H(p, sp);
    CHECK(frobenius_norm(commutator(h, excitation_operator(sp))) <= 1e-12);
    CHECK(hermiticity_residual(h) <= 1e-14 * frobenius_norm(h));
    for (std::size_t i = 0; i < sp.dim(); ++i)
      for (std::size_t j = 0; j < sp.dim(); ++j)
        if (sp.excitation_of(i) != sp.excitation_of(j)) CHECK(std::abs(h(i, j)) == 0.0);
  }
  SECTION("resonant Jaynes-Cummings doublet") {
    // block e=1 holds |0,+1/2> (energy h/2) and |1,-1/2> (energy ω - h/2),
    // coupled by g; at h = ω both diagonals equal ω/2, so eigenvalues ω/2 ± g.
    const double omega = 1.7, g = 0.3;
    const auto p = params(omega, omega, g, 0.5, 3);
    const auto sp = p.space();
    const auto h = build_H(p, sp);
    const auto blocks = excitation_blocks(sp);
    const auto& idx = blocks[1].indices;
    ComplexMatrix hb(2, 2);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) hb(i, j) = h(idx[i], idx[j]);
    const auto eig = hermitian_eig(hb);
    CHECK(eig.eigenvalues[0] == Catch::Approx(omega / 2 - g).epsilon(1e-14));
    CHECK(eig.eigenvalues[1] == Catch::Approx(omega / 2 + g).epsilon(1e-14));
  }
}

TEST_CASE("commutator identities") {
  SECTION("resonance: [X,Y] vanishes") {
    const auto p = params(1.0, 1.0, 0.3, 1.5, 6);
    const auto sp = p.space();
    CHECK(frobenius_norm(commutator(build_X(p, sp), build_Y(p, sp))) <= 1e-12);
    CHECK(verify_commutator_identities(p, sp).within(1e-11));
  }
  SECTION("off-resonant reference point") {
    const auto p = params(1.0, 0.5, 0.1, 3.0, 12);
    const auto res = verify_commutator_identities(p, p.space());
    CHECK(res.x_y <= 1e-11 * res.scale);
    CHECK(res.x_ybar <= 1e-11 * res.scale);
    CHECK(res.y_ybar <= 1e-11 * res.scale);
  }
  SECTION("the top Fock level breaks the identity without restriction") {
    const auto p = params(1.0, 0.5, 0.4, 1.0, 4);
    const auto sp = p.space();
    const auto ops = lifted_ops(sp);
    const auto full = commutator(build_Y(p, sp), build_Ybar(p, sp)) +
                      2.0 * p.g * p.g * (2.0 * (ops.number * ops.sz) + ops.splus * ops.sminus);
    CHECK(frobenius_norm(full) > 1e-3);
  }
}
