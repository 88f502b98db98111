#pragma once

// Reduced dynamics of the spin environment.
//
// For a separable start |Γ>⊗|Ξ>, the factorized propagator sends the state to
//   W_int (|Γ(t)> ⊗ |ξ̃(t)>),  |Γ(t)> = e^{−iωa†a t}|Γ>,  |ξ̃(t)> = D_back e^{−ihtSᶻ}|Ξ>,
// so projecting the boson on |γ> gives the spin map ξ̃ ↦ O^γ ξ̃ with
//   O^γ_{m,m'} = Σ_n <γ,m|W_int|n,m'> c_n(t).
// The same reduced density matrix is therefore reachable by a partial trace
// of the evolved state or by the Kraus sum; the tests use one to check the other.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "tcb/algebra.hpp"
#include "tcb/config.hpp"
#include "tcb/hilbert.hpp"
#include "tcb/model.hpp"
#include "tcb/propagator.hpp"

namespace tcb {

/// Reduced state of the spin environment.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(ComplexMatrix rho) : rho_(std::move(rho)) {
    if (!rho_.is_square()) throw InvalidArgument("DensityMatrix: matrix must be square");
  }

  static DensityMatrix pure(const StateVector& psi) {
    ComplexMatrix r(psi.dim(), psi.dim());
    for (std::size_t i = 0; i < psi.dim(); ++i)
      for (std::size_t j = 0; j < psi.dim(); ++j) r(i, j) = psi.amplitudes[i] * std::conj(psi.amplitudes[j]);
    return DensityMatrix(std::move(r));
  }

  const ComplexMatrix& matrix() const { return rho_; }
  std::size_t dim() const { return rho_.rows(); }
  cplx operator()(std::size_t i, std::size_t j) const { return rho_(i, j); }

  double trace_residual() const { return std::abs(rho_.trace() - cplx{1.0}); }
  double hermiticity_residual() const { return tcb::hermiticity_residual(rho_); }
  double purity() const { return (rho_ * rho_).trace().real(); }

  /// Eigenvalues of the Hermitian part, ascending.
  std::vector<double> eigenvalues() const {
    const ComplexMatrix sym = 0.5 * (rho_ + rho_.adjoint());
    return hermitian_eig(sym).eigenvalues;
  }

  /// Throws unless the matrix is a state within tol.structural.
  void validate(const Tolerances& tol = kDefaultTolerances) const {
    if (hermiticity_residual() > tol.structural) throw NumericalFailure("DensityMatrix: not Hermitian");
    if (trace_residual() > tol.structural) throw NumericalFailure("DensityMatrix: trace differs from one");
    const auto ev = eigenvalues();
    if (!ev.empty() && ev.front() < -tol.structural) throw NumericalFailure("DensityMatrix: negative eigenvalue");
  }

 private:
  ComplexMatrix rho_;
};

// ---------------------------------------------------------------------------
// State evolution

enum class EvolutionMethod { exact, factorized };

struct Evolution {
  StateVector state;
  /// Weight on the two highest retained Fock levels.
  double boundary_population = 0.0;
  bool boundary_warning = false;
};

inline double top_fock_population(const StateVector& psi, const ProductSpace& sp, int levels = 2) {
  if (psi.dim() != sp.dim()) throw InvalidArgument("top_fock_population: dimension mismatch");
  const int first = std::max(0, sp.fock().n_max() - levels + 1);
  double w = 0.0;
  for (std::size_t i = 0; i < sp.dim(); ++i)
    if (static_cast<int>(sp.boson_of(i)) >= first) w += std::norm(psi.amplitudes[i]);
  return w;
}

inline Evolution evolve(const StateVector& psi0, const TCParams& p, const ProductSpace& sp, double t,
                        EvolutionMethod method, const FactorizedOptions& opts = {},
                        const Tolerances& tol = kDefaultTolerances) {
  detail::require_matching_space(p, sp);
  if (psi0.dim() != sp.dim()) throw InvalidArgument("evolve: state does not live on the product space");
  if (std::abs(psi0.norm() - 1.0) > tol.structural) throw InvalidArgument("evolve: initial state is not normalized");
  const BlockOperator u = method == EvolutionMethod::exact ? exact_propagator(p, sp, t)
                                                           : factorized_propagator(p, sp, t, opts, tol).combined();
  Evolution out{u.apply(psi0)};
  out.boundary_population = top_fock_population(out.state, sp);
  out.boundary_warning = out.boundary_population > tol.top_fock_population;
  return out;
}

/// e^{−iωa†a t}|Γ>, the freely evolved boson state.
inline StateVector free_boson(const StateVector& gamma, const TCParams& p, double t) {
  StateVector out = gamma;
  for (std::size_t n = 0; n < out.dim(); ++n) out.amplitudes[n] *= std::polar(1.0, -p.omega * t * static_cast<double>(n));
  return out;
}

/// D_back e^{−ihtSᶻ}|ξ0>. Both factors are diagonal in the Sᶻ basis.
inline StateVector tilde_xi(const StateVector& xi0, const TCParams& p, double t, bool include_back_action = true) {
  p.validate();
  const auto& spin = p.spin;
  if (xi0.dim() != spin.dim()) throw InvalidArgument("tilde_xi: state does not live on the spin space");
  const cplx G = include_back_action ? kernel_for(p).G(t) : cplx{};
  const double g2 = p.g * p.g;
  StateVector out = xi0;
  for (std::size_t k = 0; k < spin.dim(); ++k)
    out.amplitudes[k] *= std::exp(g2 * G * splus_sminus_value(spin, k)) * std::polar(1.0, -p.h * t * spin.m(k));
  return out;
}

/// ρ[m,m'] = Σ_n ψ(n,m) ψ*(n,m').
inline DensityMatrix partial_trace_env(const StateVector& psi, const ProductSpace& sp) {
  if (psi.dim() != sp.dim()) throw InvalidArgument("partial_trace_env: dimension mismatch");
  const std::size_t ds = sp.spin().dim();
  ComplexMatrix rho(ds, ds);
  for (std::size_t n = 0; n < sp.fock().dim(); ++n)
    for (std::size_t i = 0; i < ds; ++i) {
      const cplx a = psi.amplitudes[sp.index(n, i)];
      if (a == cplx{}) continue;
      for (std::size_t j = 0; j < ds; ++j) rho(i, j) += a * std::conj(psi.amplitudes[sp.index(n, j)]);
    }
  return DensityMatrix(std::move(rho));
}

// ---------------------------------------------------------------------------
// Kraus form

struct KrausSet {
  std::vector<ComplexMatrix> operators;  // one per retained Fock level γ
  std::vector<double> norms;             // ‖O^γ‖_F, reported rather than pruned
  double completeness_defect = 0.0;      // ‖Σ O†O − I‖_F
  bool truncation_flag = false;          // defect above tol.kraus_completeness
};

/// Kraus operators for a given interaction factor W_int and free boson state.
inline KrausSet kraus_from_interaction(const BlockOperator& w, const StateVector& gamma_t,
                                       const Tolerances& tol = kDefaultTolerances) {
  const auto& sp = w.space();
  if (gamma_t.dim() != sp.fock().dim()) throw InvalidArgument("kraus_set: boson state does not match the Fock space");
  const std::size_t ds = sp.spin().dim();
  KrausSet ks;
  ks.operators.assign(sp.fock().dim(), ComplexMatrix(ds, ds));
  // W is block diagonal, so each block contributes to the operators of the
  // boson levels appearing among its rows.
  for (std::size_t b = 0; b < w.blocks().size(); ++b) {
    const auto& idx = w.layout()[b].indices;
    const auto& m = w.blocks()[b];
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto& o = ks.operators[sp.boson_of(idx[i])];
      const std::size_t row = sp.spin_of(idx[i]);
      for (std::size_t j = 0; j < idx.size(); ++j)
        o(row, sp.spin_of(idx[j])) += m(i, j) * gamma_t.amplitudes[sp.boson_of(idx[j])];
    }
  }
  ComplexMatrix sum(ds, ds);
  for (const auto& o : ks.operators) {
    ks.norms.push_back(frobenius_norm(o));
    sum += o.adjoint() * o;
  }
  ks.completeness_defect = frobenius_distance(sum, ComplexMatrix::identity(ds));
  ks.truncation_flag = ks.completeness_defect > tol.kraus_completeness;
  return ks;
}

/// O^γ_{m,m'} = Σ_n <γ,m|W_int(t)|n,m'> c_n(t), with c_n the amplitudes of
/// the freely evolved boson state.
inline KrausSet kraus_set(const TCParams& p, const ProductSpace& sp, double t, const StateVector& gamma_t,
                          const Tolerances& tol = kDefaultTolerances) {
  const auto w = factorized_propagator(p, sp, t, {}, tol).interaction;
  return kraus_from_interaction(w, gamma_t, tol);
}

/// Σ_γ O^γ|ξ><ξ|O^γ†.
inline DensityMatrix rho_from_kraus(const KrausSet& ks, const StateVector& xi_t) {
  if (ks.operators.empty()) throw InvalidArgument("rho_from_kraus: empty Kraus set");
  const std::size_t ds = ks.operators.front().rows();
  if (xi_t.dim() != ds) throw InvalidArgument("rho_from_kraus: dimension mismatch");
  ComplexMatrix rho(ds, ds);
  for (const auto& o : ks.operators) {
    const auto v = o * std::span<const cplx>(xi_t.amplitudes);
    for (std::size_t i = 0; i < ds; ++i)
      for (std::size_t j = 0; j < ds; ++j) rho(i, j) += v[i] * std::conj(v[j]);
  }
  return DensityMatrix(std::move(rho));
}

/// −Σ λ ln λ in nats over eigenvalues at or above cutoff. A pure state can
/// show an eigenvalue a few ulps above one, so the sum is clamped at zero.
inline double entanglement_entropy(const DensityMatrix& rho, double cutoff = 1e-14) {
  double s = 0.0;
  for (double lam : rho.eigenvalues())
    if (lam >= cutoff) s -= lam * std::log(lam);
  return std::max(s, 0.0);
}

// ---------------------------------------------------------------------------
// Both routes for one separable start

struct ChannelReport {
  KrausSet kraus;
  DensityMatrix rho_kraus;       // Kraus sum applied to ξ̃(t)
  DensityMatrix rho_factorized;  // partial trace of the factorized evolution
  DensityMatrix rho_exact;       // partial trace of the exact evolution
  DensityMatrix rho_ablated;     // Kraus sum applied to ξ̃(t) without D_back
  double dual_route_gap = 0.0;   // max entry of |ρ_kraus − ρ_factorized|
  double exact_route_gap = 0.0;  // same against the exact route; reported only
  double entropy = 0.0;
  double entropy_ablated = 0.0;
  double boundary_population = 0.0;
};

inline double max_entry_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("max_entry_distance: dimension mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) d = std::max(d, std::abs(a(i, j) - b(i, j)));
  return d;
}

inline ChannelReport channel_report(const StateVector& gamma, const StateVector& xi0, const TCParams& p,
                                    const ProductSpace& sp, double t, const Tolerances& tol = kDefaultTolerances) {
  detail::require_matching_space(p, sp);
  const auto fac = factorized_propagator(p, sp, t, {}, tol);
  const StateVector gamma_t = free_boson(gamma, p, t);
  ChannelReport r;
  r.kraus = kraus_from_interaction(fac.interaction, gamma_t, tol);
  r.rho_kraus = rho_from_kraus(r.kraus, tilde_xi(xi0, p, t));
  r.rho_ablated = rho_from_kraus(r.kraus, tilde_xi(xi0, p, t, false));

  const StateVector psi0 = product_state(gamma, xi0);
  const StateVector psi_fac = fac.combined().apply(psi0);
  const StateVector psi_exact = exact_propagator(p, sp, t).apply(psi0);
  r.rho_factorized = partial_trace_env(psi_fac, sp);
  r.rho_exact = partial_trace_env(psi_exact, sp);
  r.dual_route_gap = max_entry_distance(r.rho_kraus, r.rho_factorized);
  r.exact_route_gap = max_entry_distance(r.rho_kraus, r.rho_exact);
  r.entropy = entanglement_entropy(r.rho_kraus);
  r.entropy_ablated = entanglement_entropy(r.rho_ablated);
  r.boundary_population = top_fock_population(psi_exact, sp);
  return r;
}

}  // namespace tcb
