#pragma once

// Spin, Fock and product spaces; collective spin and boson operators;
// initial states; the excitation-number block structure.
//
// Conventions: spin basis ordered by m ascending (-S first); product basis
// |n>⊗|m> with the boson index major, i.e. index = n*(2S+1) + (m+S).

#include <cmath>
#include <complex>
#include <numbers>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tcb/algebra.hpp"
#include "tcb/config.hpp"

namespace tcb {

class SpinSpace {
 public:
  /// Spin S given as 2S (an integer) so half-integers stay exact.
  static SpinSpace from_twice(int two_s, std::optional<int> n_particles = std::nullopt) {
    return SpinSpace(two_s, n_particles);
  }
  explicit SpinSpace(double s, std::optional<int> n_particles = std::nullopt)
      : SpinSpace(checked_twice(s), n_particles) {}

  double s() const { return 0.5 * two_s_; }
  int two_s() const { return two_s_; }
  std::size_t dim() const { return static_cast<std::size_t>(two_s_) + 1; }
  std::optional<int> n_particles() const { return n_particles_; }
  /// m value of spin basis index k.
  double m(std::size_t k) const { return static_cast<double>(k) - s(); }

  friend bool operator==(const SpinSpace&, const SpinSpace&) = default;

 private:
  SpinSpace(int two_s, std::optional<int> n_particles) : two_s_(two_s), n_particles_(n_particles) {
    if (two_s_ < 0) throw InvalidArgument("SpinSpace: 2S must be non-negative");
    if (n_particles_ && *n_particles_ < two_s_)
      throw InvalidArgument("SpinSpace: N spin-1/2 particles carry at most S = N/2");
  }
  static int checked_twice(double s) {
    const double twice = 2.0 * s;
    const double rounded = std::round(twice);
    if (std::abs(twice - rounded) > 1e-12 || rounded < 0)
      throw InvalidArgument("SpinSpace: S must be a non-negative half-integer");
    return static_cast<int>(rounded);
  }

  int two_s_ = 0;
  std::optional<int> n_particles_;
};

class FockSpace {
 public:
  explicit FockSpace(int n_max) : n_max_(n_max) {
    if (n_max_ < 0) throw InvalidArgument("FockSpace: n_max must be non-negative");
  }
  int n_max() const { return n_max_; }
  std::size_t dim() const { return static_cast<std::size_t>(n_max_) + 1; }

  friend bool operator==(const FockSpace&, const FockSpace&) = default;

 private:
  int n_max_ = 0;
};

class ProductSpace {
 public:
  ProductSpace(SpinSpace spin, FockSpace fock) : spin_(spin), fock_(fock) {}

  const SpinSpace& spin() const { return spin_; }
  const FockSpace& fock() const { return fock_; }
  std::size_t dim() const { return spin_.dim() * fock_.dim(); }

  std::size_t index(std::size_t n, std::size_t k) const { return n * spin_.dim() + k; }
  std::size_t boson_of(std::size_t idx) const { return idx / spin_.dim(); }
  std::size_t spin_of(std::size_t idx) const { return idx % spin_.dim(); }
  /// n + m + S for a product-basis index.
  int excitation_of(std::size_t idx) const { return static_cast<int>(boson_of(idx) + spin_of(idx)); }

  friend bool operator==(const ProductSpace&, const ProductSpace&) = default;

 private:
  SpinSpace spin_;
  FockSpace fock_;
};

struct StateVector {
  std::vector<cplx> amplitudes;
  bool normalized = true;

  std::size_t dim() const { return amplitudes.size(); }
  double norm() const {
    double s = 0.0;
    for (const auto& z : amplitudes) s += std::norm(z);
    return std::sqrt(s);
  }
  static StateVector basis(std::size_t dim, std::size_t k) {
    StateVector v{std::vector<cplx>(dim), true};
    v.amplitudes.at(k) = 1.0;
    return v;
  }
  /// Rescales to unit norm; throws on the zero vector.
  static StateVector normalize(std::vector<cplx> amps) {
    StateVector v{std::move(amps), false};
    const double nrm = v.norm();
    if (nrm == 0.0) throw InvalidArgument("StateVector: cannot normalize the zero vector");
    for (auto& z : v.amplitudes) z /= nrm;
    v.normalized = true;
    return v;
  }
};

inline cplx inner(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("inner: dimension mismatch");
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a.amplitudes[i]) * b.amplitudes[i];
  return s;
}

/// |γ>⊗|ξ> under the boson-major ordering.
inline StateVector product_state(const StateVector& boson, const StateVector& spin) {
  StateVector out{std::vector<cplx>(boson.dim() * spin.dim()), boson.normalized && spin.normalized};
  for (std::size_t n = 0; n < boson.dim(); ++n)
    for (std::size_t k = 0; k < spin.dim(); ++k)
      out.amplitudes[n * spin.dim() + k] = boson.amplitudes[n] * spin.amplitudes[k];
  return out;
}

/// <ψ|op|ψ>
inline cplx expectation(const ComplexMatrix& op, const StateVector& psi) {
  const auto v = op * std::span<const cplx>(psi.amplitudes);
  cplx s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += std::conj(psi.amplitudes[i]) * v[i];
  return s;
}

struct SpinOperators {
  ComplexMatrix sz, splus, sminus;
};

inline SpinOperators spin_ops(const SpinSpace& sp) {
  const std::size_t d = sp.dim();
  const double s = sp.s();
  SpinOperators ops{ComplexMatrix(d, d), ComplexMatrix(d, d), ComplexMatrix(d, d)};
  for (std::size_t k = 0; k < d; ++k) {
    const double m = sp.m(k);
    ops.sz(k, k) = m;
    if (k + 1 < d) ops.splus(k + 1, k) = std::sqrt(s * (s + 1.0) - m * (m + 1.0));
  }
  ops.sminus = ops.splus.adjoint();
  return ops;
}

struct BosonOperators {
  ComplexMatrix a, adag;
};

inline BosonOperators boson_ops(const FockSpace& f) {
  const std::size_t d = f.dim();
  BosonOperators ops{ComplexMatrix(d, d), ComplexMatrix(d, d)};
  for (std::size_t n = 1; n < d; ++n) ops.a(n - 1, n) = std::sqrt(static_cast<double>(n));
  ops.adag = ops.a.adjoint();
  return ops;
}

enum class Factor { boson, spin };

/// Embeds a single-factor operator into the product space.
inline ComplexMatrix lift(const ComplexMatrix& op, Factor which, const ProductSpace& space,
                          const Tolerances& tol = kDefaultTolerances) {
  const std::size_t want = which == Factor::boson ? space.fock().dim() : space.spin().dim();
  if (!op.is_square() || op.rows() != want) throw InvalidArgument("lift: operator does not match the chosen factor");
  if (which == Factor::boson) return kron(op, ComplexMatrix::identity(space.spin().dim()), tol);
  return kron(ComplexMatrix::identity(space.fock().dim()), op, tol);
}

/// Every operator of the model, lifted to the product space.
struct LiftedOperators {
  ComplexMatrix a, adag, splus, sminus, sz, number;
};

inline LiftedOperators lifted_ops(const ProductSpace& space) {
  const auto b = boson_ops(space.fock());
  const auto s = spin_ops(space.spin());
  LiftedOperators out{lift(b.a, Factor::boson, space),     lift(b.adag, Factor::boson, space),
                      lift(s.splus, Factor::spin, space),  lift(s.sminus, Factor::spin, space),
                      lift(s.sz, Factor::spin, space),     ComplexMatrix{}};
  out.number = out.adag * out.a;
  return out;
}

struct ExcitationBlock {
  int excitation = 0;
  std::vector<std::size_t> indices;  // ascending product-basis indices
};

using ExcitationBlocks = std::vector<ExcitationBlock>;

/// Partition of the product basis by e = n + m + S, in increasing e.
inline ExcitationBlocks excitation_blocks(const ProductSpace& space) {
  const int e_max = space.fock().n_max() + space.spin().two_s();
  ExcitationBlocks blocks(static_cast<std::size_t>(e_max) + 1);
  for (int e = 0; e <= e_max; ++e) blocks[static_cast<std::size_t>(e)].excitation = e;
  for (std::size_t idx = 0; idx < space.dim(); ++idx)
    blocks[static_cast<std::size_t>(space.excitation_of(idx))].indices.push_back(idx);
  return blocks;
}

struct CoherentBoson {
  StateVector state;
  double leakage = 0.0;  // Poisson weight beyond n_max
};

/// Truncated Glauber state. Rejects truncations that lose more than
/// tol.leakage of the Poisson weight.
inline CoherentBoson coherent_boson(cplx alpha, const FockSpace& f, const Tolerances& tol = kDefaultTolerances) {
  const double mean = std::norm(alpha);
  std::vector<cplx> amps(f.dim());
  cplx term = 1.0;
  for (std::size_t n = 0; n < f.dim(); ++n) {
    if (n > 0) term *= alpha / std::sqrt(static_cast<double>(n));
    amps[n] = term;
  }
  // Tail sum of e^{-|α|²}|α|^{2n}/n! for n > n_max, accumulated directly.
  double leakage = 0.0;
  if (mean > 0.0) {
    double log_weight = -mean;
    for (int n = 1; n <= f.n_max(); ++n) log_weight += std::log(mean) - std::log(static_cast<double>(n));
    for (int n = f.n_max() + 1;; ++n) {
      log_weight += std::log(mean) - std::log(static_cast<double>(n));
      const double w = std::exp(log_weight);
      leakage += w;
      if (n > mean && w <= 1e-17 * leakage) break;
      if (w == 0.0 && n > mean) break;
    }
  }
  if (leakage > tol.leakage)
    throw InvalidArgument("coherent_boson: truncation leaks " + std::to_string(leakage) +
                          " of the Poisson weight; increase n_max");
  return {StateVector::normalize(std::move(amps)), leakage};
}

/// Spin coherent state exp(ξS⁺ − ξ*S⁻)|S,−S>, ξ = (θ/2)e^{−iφ}: rotation of
/// the south pole, so <Sᶻ> = −S cosθ.
inline StateVector spin_coherent(double theta, double phi, const SpinSpace& sp,
                                 const Tolerances& tol = kDefaultTolerances) {
  if (theta < 0.0 || theta > std::numbers::pi) throw InvalidArgument("spin_coherent: theta must lie in [0, pi]");
  const auto ops = spin_ops(sp);
  const cplx xi = std::polar(0.5 * theta, -phi);
  const ComplexMatrix gen = xi * ops.splus - std::conj(xi) * ops.sminus;
  const auto u = expm_skew(gen, tol);
  std::vector<cplx> amps(sp.dim());
  for (std::size_t k = 0; k < sp.dim(); ++k) amps[k] = u(k, 0);
  return StateVector::normalize(std::move(amps));
}

}  // namespace tcb
