#pragma once

// Exact and factorized propagators on the truncated product space.
//
// H conserves N = a†a + Sᶻ + S, so every operator here is stored block by
// block over the excitation sectors. Inside a sector the basis runs over
// increasing boson number, which makes H and the interaction generator
// tridiagonal.
//
// The factorized propagator is the product, in this order,
//   W_int  = exp(g[f(t) aS⁺ − f*(t) a†S⁻])
//   D_back = exp(g² G(t) S⁺S⁻)
//   D_free = exp(−itX).

#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "tcb/algebra.hpp"
#include "tcb/analytic.hpp"
#include "tcb/config.hpp"
#include "tcb/hilbert.hpp"
#include "tcb/model.hpp"
#include "tcb/numerics.hpp"

namespace tcb {

/// Operator that commutes with the excitation number, stored as one dense
/// matrix per excitation block.
class BlockOperator {
 public:
  BlockOperator(ProductSpace space, std::vector<ComplexMatrix> blocks)
      : space_(space), layout_(excitation_blocks(space)), blocks_(std::move(blocks)) {
    if (blocks_.size() != layout_.size()) throw InvalidArgument("BlockOperator: wrong number of blocks");
    for (std::size_t b = 0; b < blocks_.size(); ++b)
      if (blocks_[b].rows() != layout_[b].indices.size() || !blocks_[b].is_square())
        throw InvalidArgument("BlockOperator: block shape does not match its sector");
  }

  static BlockOperator identity(const ProductSpace& space) {
    std::vector<ComplexMatrix> blocks;
    for (const auto& b : excitation_blocks(space)) blocks.push_back(ComplexMatrix::identity(b.indices.size()));
    return BlockOperator(space, std::move(blocks));
  }

  const ProductSpace& space() const { return space_; }
  const ExcitationBlocks& layout() const { return layout_; }
  const std::vector<ComplexMatrix>& blocks() const { return blocks_; }
  std::size_t dim() const { return space_.dim(); }

  StateVector apply(const StateVector& psi) const {
    if (psi.dim() != dim()) throw InvalidArgument("BlockOperator::apply: dimension mismatch");
    StateVector out{std::vector<cplx>(dim()), psi.normalized};
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const auto& idx = layout_[b].indices;
      const auto& m = blocks_[b];
      for (std::size_t i = 0; i < idx.size(); ++i) {
        cplx s = 0.0;
        for (std::size_t j = 0; j < idx.size(); ++j) s += m(i, j) * psi.amplitudes[idx[j]];
        out.amplitudes[idx[i]] = s;
      }
    }
    return out;
  }

  ComplexMatrix to_dense(const Tolerances& tol = kDefaultTolerances) const {
    if (dim() > tol.max_dim) throw LimitExceeded("BlockOperator::to_dense: dimension beyond the configured limit");
    ComplexMatrix d(dim(), dim());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const auto& idx = layout_[b].indices;
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j) d(idx[i], idx[j]) = blocks_[b](i, j);
    }
    return d;
  }

  BlockOperator adjoint() const {
    std::vector<ComplexMatrix> out;
    for (const auto& m : blocks_) out.push_back(m.adjoint());
    return BlockOperator(space_, std::move(out));
  }

  friend BlockOperator operator*(const BlockOperator& x, const BlockOperator& y) {
    if (!(x.space_ == y.space_)) throw InvalidArgument("BlockOperator: product of operators on different spaces");
    std::vector<ComplexMatrix> out;
    for (std::size_t b = 0; b < x.blocks_.size(); ++b) out.push_back(x.blocks_[b] * y.blocks_[b]);
    return BlockOperator(x.space_, std::move(out));
  }

  /// This operator times a diagonal operator given on the full product basis.
  BlockOperator times_diagonal(const std::vector<cplx>& diag) const {
    if (diag.size() != dim()) throw InvalidArgument("BlockOperator::times_diagonal: dimension mismatch");
    std::vector<ComplexMatrix> out = blocks_;
    for (std::size_t b = 0; b < out.size(); ++b) {
      const auto& idx = layout_[b].indices;
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j) out[b](i, j) *= diag[idx[j]];
    }
    return BlockOperator(space_, std::move(out));
  }

  /// ‖U†U − I‖_F accumulated over blocks.
  double unitarity_residual() const {
    double s = 0.0;
    for (const auto& m : blocks_) {
      const double r = tcb::unitarity_residual(m);
      s += r * r;
    }
    return std::sqrt(s);
  }

 private:
  ProductSpace space_;
  ExcitationBlocks layout_;
  std::vector<ComplexMatrix> blocks_;
};

/// Frobenius distance over the columns whose boson number is at most
/// max_boson (all columns when absent), divided by √(number of columns).
inline double column_restricted_distance(const BlockOperator& x, const BlockOperator& y,
                                         std::optional<int> max_boson = std::nullopt) {
  if (!(x.space() == y.space())) throw InvalidArgument("column_restricted_distance: different spaces");
  const auto& sp = x.space();
  double s = 0.0;
  std::size_t cols = 0;
  for (std::size_t b = 0; b < x.layout().size(); ++b) {
    const auto& idx = x.layout()[b].indices;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      if (max_boson && static_cast<int>(sp.boson_of(idx[j])) > *max_boson) continue;
      ++cols;
      for (std::size_t i = 0; i < idx.size(); ++i) s += std::norm(x.blocks()[b](i, j) - y.blocks()[b](i, j));
    }
  }
  if (cols == 0) return 0.0;
  return std::sqrt(s / static_cast<double>(cols));
}

// ---------------------------------------------------------------------------
// Block matrices of the model

namespace detail {
// Tridiagonal block with diagonal d(idx) and coupling c(n, k) between
// positions i = (n, k) and i+1 = (n+1, k−1), placed at (i, i+1); the (i+1, i)
// entry is lower(c).
template <class Diag, class Upper, class Lower>
ComplexMatrix tridiagonal_block(const ProductSpace& sp, const ExcitationBlock& blk, Diag diag, Upper upper,
                                Lower lower) {
  const auto& idx = blk.indices;
  ComplexMatrix m(idx.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    m(i, i) = diag(idx[i]);
    if (i + 1 < idx.size()) {
      const std::size_t n = sp.boson_of(idx[i]);
      const std::size_t k_next = sp.spin_of(idx[i + 1]);
      // ⟨n, k| a S⁺ |n+1, k−1⟩ = √(n+1) · ⟨k|S⁺|k−1⟩
      const double amp = std::sqrt(static_cast<double>(n + 1)) * splus_element(sp.spin(), k_next);
      m(i, i + 1) = upper(amp);
      m(i + 1, i) = lower(amp);
    }
  }
  return m;
}
}  // namespace detail

inline double free_energy(const TCParams& p, const ProductSpace& sp, std::size_t idx) {
  return p.omega * static_cast<double>(sp.boson_of(idx)) + p.h * sp.spin().m(sp.spin_of(idx));
}

/// H restricted to one excitation block.
inline ComplexMatrix block_hamiltonian(const TCParams& p, const ProductSpace& sp, const ExcitationBlock& blk) {
  return detail::tridiagonal_block(
      sp, blk, [&](std::size_t idx) { return cplx{free_energy(p, sp, idx)}; },
      [&](double amp) { return cplx{p.g * amp}; }, [&](double amp) { return cplx{p.g * amp}; });
}

/// g(f aS⁺ − f* a†S⁻) restricted to one excitation block.
inline ComplexMatrix block_interaction_generator(const TCParams& p, const ProductSpace& sp,
                                                 const ExcitationBlock& blk, cplx f) {
  return detail::tridiagonal_block(
      sp, blk, [](std::size_t) { return cplx{}; }, [&](double amp) { return p.g * f * amp; },
      [&](double amp) { return -p.g * std::conj(f) * amp; });
}

inline BackActionKernel kernel_for(const TCParams& p) {
  BackActionKernel k;
  k.delta = p.delta();
  k.g = p.g;
  k.s = p.spin.s();
  k.validate();
  return k;
}

// ---------------------------------------------------------------------------
// Exact propagator

/// Eigendecomposition of H, one block at a time; reused across times.
class BlockSpectrum {
 public:
  BlockSpectrum(const TCParams& p, const ProductSpace& sp, const Tolerances& tol = kDefaultTolerances)
      : space_(sp) {
    detail::require_matching_space(p, sp);
    for (const auto& blk : excitation_blocks(sp)) eig_.push_back(hermitian_eig(block_hamiltonian(p, sp, blk), tol));
  }

  BlockOperator propagator(double t) const {
    if (!std::isfinite(t)) throw InvalidArgument("exact_propagator: t must be finite");
    std::vector<ComplexMatrix> blocks;
    blocks.reserve(eig_.size());
    for (const auto& e : eig_) blocks.push_back(spectral_apply(e, [t](double lam) { return std::polar(1.0, -lam * t); }));
    return BlockOperator(space_, std::move(blocks));
  }

  const std::vector<HermitianEigen>& blocks() const { return eig_; }

 private:
  ProductSpace space_;
  std::vector<HermitianEigen> eig_;
};

/// e^{−iHt}, assembled from the block eigendecompositions.
inline BlockOperator exact_propagator(const TCParams& p, const ProductSpace& sp, double t) {
  return BlockSpectrum(p, sp).propagator(t);
}

// ---------------------------------------------------------------------------
// Factorized propagator

struct FactorizedOptions {
  bool include_back_action = true;   // false replaces D_back by the identity
  double validity_fraction = 0.25;   // t < fraction · S counts as inside the window
};

struct FactorizedPropagator {
  BlockOperator interaction;       // W_int
  std::vector<cplx> back_action;   // diagonal of D_back
  std::vector<cplx> free;          // diagonal of D_free
  cplx f{}, G{};
  double t = 0.0;
  bool within_validity_window = true;

  /// W_int · D_back · D_free
  BlockOperator combined() const {
    std::vector<cplx> diag(free.size());
    for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = back_action[i] * free[i];
    return interaction.times_diagonal(diag);
  }
};

inline FactorizedPropagator factorized_propagator(const TCParams& p, const ProductSpace& sp, double t,
                                                  const FactorizedOptions& opts = {},
                                                  const Tolerances& tol = kDefaultTolerances) {
  detail::require_matching_space(p, sp);
  if (!std::isfinite(t)) throw InvalidArgument("factorized_propagator: t must be finite");
  const auto kernel = kernel_for(p);
  const cplx f = kernel.f(t);
  const cplx G = kernel.G(t);

  std::vector<ComplexMatrix> w;
  for (const auto& blk : excitation_blocks(sp)) {
    const auto k = block_interaction_generator(p, sp, blk, f);
    w.push_back(expm_skew(k, tol));
  }

  std::vector<cplx> back(sp.dim()), free(sp.dim());
  const double g2 = p.g * p.g;
  for (std::size_t i = 0; i < sp.dim(); ++i) {
    const double spsm = splus_sminus_value(sp.spin(), sp.spin_of(i));
    // G is pure imaginary, so this is a phase
    back[i] = opts.include_back_action ? std::exp(g2 * G * spsm) : cplx{1.0};
    free[i] = std::polar(1.0, -t * free_energy(p, sp, i));
  }
  FactorizedPropagator out{BlockOperator(sp, std::move(w)), std::move(back), std::move(free), f, G, t, true};
  out.within_validity_window = std::abs(t) < opts.validity_fraction * p.spin.s();
  return out;
}

// ---------------------------------------------------------------------------
// Comparison and consistency

struct PropagatorPair {
  BlockOperator exact;
  BlockOperator factorized;
  double t = 0.0;
  TCParams params;
  /// Columns compared: product states with boson number ≤ n_sector; every
  /// column when absent.
  std::optional<int> n_sector;
};

inline PropagatorPair make_propagator_pair(const TCParams& p, const ProductSpace& sp, double t,
                                std::optional<int> n_sector = std::nullopt, const FactorizedOptions& opts = {}) {
  return {exact_propagator(p, sp, t), factorized_propagator(p, sp, t, opts).combined(), t, p, n_sector};
}

/// ‖(U_exact − U_fact) P‖_F / √(columns of P), where P selects the compared columns.
inline double propagator_error(const PropagatorPair& pair) {
  return column_restricted_distance(pair.exact, pair.factorized, pair.n_sector);
}

/// Smallest Fock truncation for which every block reached from a state with
/// at most n_sector bosons is complete: n_max = n_sector + 2S.
inline int policy_n_max(int n_sector, const SpinSpace& spin) {
  if (n_sector < 0) throw InvalidArgument("policy_n_max: n_sector must be non-negative");
  return n_sector + spin.two_s();
}

/// Smallest n such that a coherent state |α⟩ loses at most tol.leakage of
/// its Poisson weight above n.
inline int coherent_sector(cplx alpha, const Tolerances& tol = kDefaultTolerances) {
  const double mean = std::norm(alpha);
  if (mean == 0.0) return 0;
  double weight = std::exp(-mean), cumulative = weight;
  for (int n = 1; n < 100000; ++n) {
    weight *= mean / n;
    cumulative += weight;
    if (1.0 - cumulative <= tol.leakage && n > mean) {
      // the complement loses digits near 1; confirm with a direct tail sum
      double tail = 0.0, w = weight;
      for (int m = n + 1; m < n + 10000; ++m) {
        w *= mean / m;
        tail += w;
        if (w <= 1e-18 * tail) break;
      }
      if (tail <= tol.leakage) return n;
    }
  }
  throw LimitExceeded("coherent_sector: amplitude too large");
}

struct XEffConsistency {
  double diagonal_residual = 0.0;   // max |D_back D_free − exp(−i[tX + i g²G S⁺S⁻])| entrywise
  double quadrature_residual = 0.0; // |∫₀ᵗ A − i g² G(t)|
  double integral = 0.0;
  double expected = 0.0;
};

inline XEffConsistency x_eff_consistency(const TCParams& p, const ProductSpace& sp, double t,
                                         double quad_tol = 1e-11) {
  detail::require_matching_space(p, sp);
  const auto kernel = kernel_for(p);
  const cplx G = kernel.G(t);
  const double g2 = p.g * p.g;
  XEffConsistency out;
  for (std::size_t i = 0; i < sp.dim(); ++i) {
    const double spsm = splus_sminus_value(sp.spin(), sp.spin_of(i));
    const cplx product = std::exp(g2 * G * spsm) * std::polar(1.0, -t * free_energy(p, sp, i));
    const cplx joint = std::exp(cplx{0.0, -1.0} * (t * free_energy(p, sp, i) + cplx{0.0, 1.0} * g2 * G * spsm));
    out.diagonal_residual = std::max(out.diagonal_residual, std::abs(product - joint));
  }
  out.integral = adaptive_simpson([&](double tau) { return kernel.A(tau); }, 0.0, t, quad_tol);
  out.expected = (cplx{0.0, 1.0} * g2 * G).real();
  out.quadrature_residual = std::abs(out.integral - out.expected);
  return out;
}

// ---------------------------------------------------------------------------
// Effective environmental Hamiltonian

enum class HxiForm { exact, large_s };

/// Spin-space effective Hamiltonian: hSᶻ + A S⁺S⁻ (exact) or
/// hSᶻ − A (Sᶻ)² − ε (large S), with ε = A S(S+1).
inline ComplexMatrix h_xi_eff(const TCParams& p, double t, HxiForm form) {
  p.validate();
  const auto kernel = kernel_for(p);
  const double a = kernel.A(t);
  const double eps = kernel.epsilon(t);
  const auto& sp = p.spin;
  ComplexMatrix h(sp.dim(), sp.dim());
  for (std::size_t k = 0; k < sp.dim(); ++k) {
    const double m = sp.m(k);
    h(k, k) = form == HxiForm::exact ? p.h * m + a * splus_sminus_value(sp, k) : p.h * m - a * m * m - eps;
  }
  return h;
}

}  // namespace tcb
