#pragma once

// Dense complex linear algebra: the kernel behind every operator in the
// library. Matrices are row-major and small (blocks of at most a few hundred),
// so everything here is self-contained and single-threaded.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tcb/config.hpp"

namespace tcb {

using cplx = std::complex<double>;

class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) throw InvalidArgument("ComplexMatrix: entry count does not match dims");
  }
  ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw InvalidArgument("ComplexMatrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static ComplexMatrix diagonal(std::span<const cplx> d) {
    ComplexMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }
  static ComplexMatrix diagonal(std::span<const double> d) {
    ComplexMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_square() const { return rows_ == cols_; }

  cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const cplx> entries() const { return data_; }
  std::span<cplx> entries() { return data_; }

  ComplexMatrix adjoint() const {
    ComplexMatrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r(j, i) = std::conj((*this)(i, j));
    return r;
  }

  cplx trace() const {
    cplx s = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
    return s;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
  }

  ComplexMatrix& operator+=(const ComplexMatrix& o) {
    require_same_shape(o, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  ComplexMatrix& operator-=(const ComplexMatrix& o) {
    require_same_shape(o, "-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  ComplexMatrix& operator*=(cplx s) {
    for (auto& z : data_) z *= s;
    return *this;
  }

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
  friend ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }
  friend ComplexMatrix operator*(ComplexMatrix a, cplx s) { return a *= s; }
  friend ComplexMatrix operator-(ComplexMatrix a) { return a *= -1.0; }

  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols_ != b.rows_) throw InvalidArgument("ComplexMatrix: product dimension mismatch");
    ComplexMatrix r(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      cplx* out = &r.data_[i * b.cols_];
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const cplx aik = a(i, k);
        if (aik == cplx{}) continue;
        const cplx* brow = &b.data_[k * b.cols_];
        for (std::size_t j = 0; j < b.cols_; ++j) out[j] += aik * brow[j];
      }
    }
    return r;
  }

  friend std::vector<cplx> operator*(const ComplexMatrix& a, std::span<const cplx> v) {
    if (a.cols_ != v.size()) throw InvalidArgument("ComplexMatrix: matrix-vector dimension mismatch");
    std::vector<cplx> r(a.rows_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      cplx s = 0.0;
      for (std::size_t j = 0; j < a.cols_; ++j) s += a(i, j) * v[j];
      r[i] = s;
    }
    return r;
  }

 private:
  void require_same_shape(const ComplexMatrix& o, const char* what) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw InvalidArgument(std::string("ComplexMatrix: shape mismatch in ") + what);
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

inline double frobenius_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (const auto& z : a.entries()) s += std::norm(z);
  return std::sqrt(s);
}

inline double frobenius_distance(const ComplexMatrix& a, const ComplexMatrix& b) { return frobenius_norm(a - b); }

/// ‖a − a†‖_F
inline double hermiticity_residual(const ComplexMatrix& a) { return frobenius_norm(a - a.adjoint()); }

/// ‖U†U − I‖_F
inline double unitarity_residual(const ComplexMatrix& u) {
  return frobenius_norm(u.adjoint() * u - ComplexMatrix::identity(u.cols()));
}

inline ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (!a.is_square() || !b.is_square() || a.rows() != b.rows())
    throw InvalidArgument("commutator: operands must be square with matching dims");
  return a * b - b * a;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b,
                          const Tolerances& tol = kDefaultTolerances) {
  const std::size_t r = a.rows() * b.rows();
  const std::size_t c = a.cols() * b.cols();
  if (r > tol.max_dim || c > tol.max_dim)
    throw LimitExceeded("kron: result of " + std::to_string(r) + "x" + std::to_string(c) +
                        " exceeds the configured dimension limit");
  ComplexMatrix out(r, c);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const cplx aij = a(i, j);
      if (aij == cplx{}) continue;
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return out;
}

struct HermitianEigen {
  std::vector<double> eigenvalues;  // ascending
  ComplexMatrix eigenvectors;       // columns
};

namespace detail {

// Implicit QL with Wilkinson-style shifts on a real symmetric tridiagonal
// matrix (diagonal d, off-diagonal e[i] between i and i+1). Rotations are
// accumulated into the columns of z.
inline void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, ComplexMatrix& z,
                           std::size_t iteration_cap) {
  const std::size_t n = d.size();
  if (n == 0) return;
  e[n - 1] = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  double f = 0.0;
  double tst1 = 0.0;
  std::size_t iterations = 0;

  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n - 1 && std::abs(e[m]) > eps * tst1) ++m;

    if (m > l) {
      do {
        if (++iterations > iteration_cap)
          throw NumericalFailure("hermitian_eig: QL iteration did not converge within the sweep cap");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          for (std::size_t k = 0; k < z.rows(); ++k) {
            const cplx zh = z(k, ii + 1);
            z(k, ii + 1) = s * z(k, ii) + c * zh;
            z(k, ii) = c * z(k, ii) - s * zh;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

}  // namespace detail

/// Eigendecomposition of a Hermitian matrix: complex Householder reduction to
/// a real symmetric tridiagonal form, then implicit QL.
inline HermitianEigen hermitian_eig(const ComplexMatrix& a, const Tolerances& tol = kDefaultTolerances) {
  if (!a.is_square()) throw InvalidArgument("hermitian_eig: matrix is not square");
  if (!a.all_finite()) throw InvalidArgument("hermitian_eig: non-finite entries");
  const double scale = frobenius_norm(a);
  if (hermiticity_residual(a) > tol.structural * scale)
    throw InvalidArgument("hermitian_eig: matrix is not Hermitian");

  const std::size_t n = a.rows();
  ComplexMatrix w = 0.5 * (a + a.adjoint());
  ComplexMatrix q = ComplexMatrix::identity(n);
  std::vector<cplx> v(n), p(n);

  for (std::size_t k = 0; k + 2 < n; ++k) {
    double tail = 0.0;
    for (std::size_t i = k + 2; i < n; ++i) tail += std::norm(w(i, k));
    if (tail == 0.0) continue;
    const cplx x0 = w(k + 1, k);
    const double xnorm = std::sqrt(tail + std::norm(x0));
    const cplx phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cplx{1.0};
    const cplx alpha = -phase * xnorm;

    std::fill(v.begin(), v.end(), cplx{});
    v[k + 1] = x0 - alpha;
    for (std::size_t i = k + 2; i < n; ++i) v[i] = w(i, k);
    double vnorm2 = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) vnorm2 += std::norm(v[i]);
    const double tau = 2.0 / vnorm2;

    // Trailing block update: W22 <- H W22 H with H = I - tau v v†.
    for (std::size_t i = k + 1; i < n; ++i) {
      cplx s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += w(i, j) * v[j];
      p[i] = tau * s;
    }
    cplx vp = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) vp += std::conj(v[i]) * p[i];
    const double half_k = 0.5 * tau * vp.real();
    for (std::size_t i = k + 1; i < n; ++i) p[i] -= half_k * v[i];
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j) w(i, j) -= v[i] * std::conj(p[j]) + p[i] * std::conj(v[j]);

    w(k + 1, k) = alpha;
    w(k, k + 1) = std::conj(alpha);
    for (std::size_t i = k + 2; i < n; ++i) {
      w(i, k) = 0.0;
      w(k, i) = 0.0;
    }

    // Q <- Q H
    for (std::size_t r = 0; r < n; ++r) {
      cplx s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += q(r, j) * v[j];
      s *= tau;
      for (std::size_t j = k + 1; j < n; ++j) q(r, j) -= s * std::conj(v[j]);
    }
  }

  // Rotate the complex off-diagonal into real non-negative numbers.
  std::vector<double> d(n), e(n, 0.0);
  cplx ph = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = w(i, i).real();
    for (std::size_t r = 0; r < n; ++r) q(r, i) *= ph;
    if (i + 1 < n) {
      const cplx t = w(i + 1, i);
      e[i] = std::abs(t);
      if (e[i] > 0.0) ph *= t / e[i];
    }
  }

  detail::tridiagonal_ql(d, e, q, tol.eig_sweeps_per_dim * std::max<std::size_t>(n, 1));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return d[i] < d[j]; });
  HermitianEigen out{std::vector<double>(n), ComplexMatrix(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    out.eigenvalues[c] = d[order[c]];
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, c) = q(r, order[c]);
  }
  return out;
}

/// V f(Λ) V† for a function of the eigenvalues.
template <class F>
ComplexMatrix spectral_apply(const HermitianEigen& eig, F&& fn) {
  const std::size_t n = eig.eigenvalues.size();
  const ComplexMatrix& v = eig.eigenvectors;
  std::vector<cplx> fv(n);
  for (std::size_t i = 0; i < n; ++i) fv[i] = fn(eig.eigenvalues[i]);
  ComplexMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const cplx vik = v(i, k) * fv[k];
      if (vik == cplx{}) continue;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += vik * std::conj(v(j, k));
    }
  return out;
}

/// exp(k) for skew-Hermitian k, through the eigendecomposition of i·k.
inline ComplexMatrix expm_skew(const ComplexMatrix& k, const Tolerances& tol = kDefaultTolerances) {
  if (!k.is_square()) throw InvalidArgument("expm_skew: matrix is not square");
  const double scale = frobenius_norm(k);
  if (frobenius_norm(k + k.adjoint()) > tol.structural * scale)
    throw InvalidArgument("expm_skew: generator is not skew-Hermitian");
  if (scale == 0.0) return ComplexMatrix::identity(k.rows());
  const auto eig = hermitian_eig(cplx{0.0, 1.0} * k, tol);
  return spectral_apply(eig, [](double lam) { return std::polar(1.0, -lam); });
}

}  // namespace tcb
