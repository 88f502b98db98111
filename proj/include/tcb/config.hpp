#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tcb {

/// Thresholds shared by every module.
struct Tolerances {
  double structural = 1e-10;   // Hermiticity, unitarity, normalization
  double arithmetic = 1e-13;   // exact algebraic identities in floating point
  double leakage = 1e-8;       // coherent-state Fock tail that triggers a rejection
  double top_fock_population = 1e-6;
  double kraus_completeness = 1e-6;
  std::size_t max_dim = 20000;  // desk-scale limit for any dense operator side
  std::size_t eig_sweeps_per_dim = 50;
};

inline constexpr Tolerances kDefaultTolerances{};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by the caller (bad dims, non-Hermitian input, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An iteration did not converge within its cap.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// A configured size or order cap was exceeded.
class LimitExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace tcb
