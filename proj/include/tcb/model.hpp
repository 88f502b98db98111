#pragma once

// Tavis-Cummings Hamiltonian H = X + Y with
//   X = ω a†a + h Sᶻ                    (free part)
//   Y = g (a S⁺ + a† S⁻)                (exchange)
//   Ȳ = g (a S⁺ − a† S⁻)
// and the commutator identities that drive the factorized propagator.

#include <cmath>
#include <vector>

#include "tcb/algebra.hpp"
#include "tcb/hilbert.hpp"

namespace tcb {

struct TCParams {
  double omega = 1.0;
  double h = 1.0;
  double g = 1.0;
  SpinSpace spin{0.5};
  int n_max = 0;

  double delta() const { return h - omega; }
  double gs() const { return g * spin.s(); }
  ProductSpace space() const { return ProductSpace(spin, FockSpace(n_max)); }

  void validate() const {
    if (!(g >= 0.0) || !std::isfinite(g)) throw InvalidArgument("TCParams: coupling g must be finite and >= 0");
    if (spin.two_s() < 1) throw InvalidArgument("TCParams: S must be at least 1/2");
    if (n_max < 0) throw InvalidArgument("TCParams: n_max must be non-negative");
    if (!std::isfinite(omega) || !std::isfinite(h)) throw InvalidArgument("TCParams: non-finite frequency");
  }
};

/// Parameters in the large-S convention: ω fixed, h = ω + δ, and g = gS/S
/// with gS = 1 unless overridden.
inline TCParams make_tc_params(double delta, double s, int n_max, double omega = 1.0, double gs = 1.0) {
  TCParams p;
  p.omega = omega;
  p.h = omega + delta;
  p.spin = SpinSpace(s);
  p.g = gs / p.spin.s();
  p.n_max = n_max;
  p.validate();
  return p;
}

namespace detail {
inline void require_matching_space(const TCParams& p, const ProductSpace& sp) {
  p.validate();
  if (!(sp.spin().two_s() == p.spin.two_s() && sp.fock().n_max() == p.n_max))
    throw InvalidArgument("model: product space does not match the parameters");
}
}  // namespace detail

/// ⟨m+1|S⁺|m⟩ for spin basis index k (m = k − S).
inline double splus_element(const SpinSpace& sp, std::size_t k) {
  const double s = sp.s(), m = sp.m(k);
  return std::sqrt(s * (s + 1.0) - m * (m + 1.0));
}

/// Eigenvalue of S⁺S⁻ = S(S+1) − (Sᶻ)² + Sᶻ on |m>.
inline double splus_sminus_value(const SpinSpace& sp, std::size_t k) {
  const double s = sp.s(), m = sp.m(k);
  return s * (s + 1.0) - m * m + m;
}

inline ComplexMatrix build_X(const TCParams& p, const ProductSpace& sp) {
  detail::require_matching_space(p, sp);
  ComplexMatrix x(sp.dim(), sp.dim());
  for (std::size_t i = 0; i < sp.dim(); ++i)
    x(i, i) = p.omega * static_cast<double>(sp.boson_of(i)) + p.h * sp.spin().m(sp.spin_of(i));
  return x;
}

inline ComplexMatrix build_Y(const TCParams& p, const ProductSpace& sp) {
  detail::require_matching_space(p, sp);
  const auto ops = lifted_ops(sp);
  return p.g * (ops.a * ops.splus + ops.adag * ops.sminus);
}

inline ComplexMatrix build_Ybar(const TCParams& p, const ProductSpace& sp) {
  detail::require_matching_space(p, sp);
  const auto ops = lifted_ops(sp);
  return p.g * (ops.a * ops.splus - ops.adag * ops.sminus);
}

inline ComplexMatrix build_H(const TCParams& p, const ProductSpace& sp) { return build_X(p, sp) + build_Y(p, sp); }

/// N = a†a + Sᶻ + S, the conserved excitation number.
inline ComplexMatrix excitation_operator(const ProductSpace& sp) {
  ComplexMatrix n(sp.dim(), sp.dim());
  for (std::size_t i = 0; i < sp.dim(); ++i) n(i, i) = static_cast<double>(sp.excitation_of(i));
  return n;
}

/// Principal submatrix on the product states with n ≤ n_keep.
inline ComplexMatrix restrict_to_low_fock(const ComplexMatrix& op, const ProductSpace& sp, int n_keep) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < sp.dim(); ++i)
    if (static_cast<int>(sp.boson_of(i)) <= n_keep) keep.push_back(i);
  ComplexMatrix r(keep.size(), keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (std::size_t j = 0; j < keep.size(); ++j) r(i, j) = op(keep[i], keep[j]);
  return r;
}

struct CommutatorResiduals {
  double x_y = 0.0;     // ‖[X,Y] − δȲ‖
  double x_ybar = 0.0;  // ‖[X,Ȳ] − δY‖
  double y_ybar = 0.0;  // ‖[Y,Ȳ] + 2g²(2a†aSᶻ + S⁺S⁻)‖
  double scale = 0.0;   // norm scale the residuals are measured against

  double worst() const { return std::max({x_y, x_ybar, y_ybar}); }
  bool within(double relative_tol) const { return worst() <= relative_tol * std::max(1.0, scale); }
};

/// Frobenius residuals of the three identities, measured on the states
/// with n ≤ n_max − 1 where [a, a†] = 1 holds.
inline CommutatorResiduals verify_commutator_identities(const TCParams& p, const ProductSpace& sp) {
  detail::require_matching_space(p, sp);
  const auto ops = lifted_ops(sp);
  const auto x = build_X(p, sp);
  const auto y = build_Y(p, sp);
  const auto ybar = build_Ybar(p, sp);
  const double d = p.delta();
  const auto casimir_mix = 2.0 * (ops.number * ops.sz) + ops.splus * ops.sminus;

  const int keep = p.n_max - 1;
  auto r = [&](const ComplexMatrix& m) { return frobenius_norm(restrict_to_low_fock(m, sp, keep)); };
  CommutatorResiduals out;
  out.x_y = r(commutator(x, y) - d * ybar);
  out.x_ybar = r(commutator(x, ybar) - d * y);
  out.y_ybar = r(commutator(y, ybar) + 2.0 * p.g * p.g * casimir_mix);
  out.scale = std::max({r(x) * r(y), r(y) * r(ybar), 1.0});
  return out;
}

}  // namespace tcb
