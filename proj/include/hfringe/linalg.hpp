#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "hfringe/errors.hpp"

namespace hfringe::detail {

// Dense helpers for the handful-of-parameters systems the fitters solve.
// Matrices are row-major n x n in flat vectors.

inline std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b,
                                       std::size_t n) {
  // Gaussian elimination with partial pivoting.
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::abs(a[col * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::abs(a[r * n + col]);
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best == 0.0) throw DegenerateError("solve_dense: singular matrix");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      std::swap(b[col], b[pivot]);
    }
    const double inv = 1.0 / a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] * inv;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri * n + c] * x[c];
    x[ri] = s / a[ri * n + ri];
  }
  return x;
}

inline std::vector<double> invert_dense(const std::vector<double>& a, std::size_t n) {
  std::vector<double> inv(n * n, 0.0);
  for (std::size_t col = 0; col < n; ++col) {
    std::vector<double> e(n, 0.0);
    e[col] = 1.0;
    const std::vector<double> x = solve_dense(a, e, n);
    for (std::size_t r = 0; r < n; ++r) inv[r * n + col] = x[r];
  }
  return inv;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
inline std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t n) {
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-300) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double theta = 0.5 * (a[q * n + q] - a[p * n + p]) / apq;
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a[i * n + i];
  return eig;
}

inline double condition_number(const std::vector<double>& symmetric, std::size_t n) {
  const std::vector<double> eig = symmetric_eigenvalues(symmetric, n);
  double lo = std::abs(eig[0]), hi = std::abs(eig[0]);
  for (double e : eig) {
    lo = std::min(lo, std::abs(e));
    hi = std::max(hi, std::abs(e));
  }
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

// Weighted linear least squares: minimizes sum_i w_i (y_i - sum_j A_ij x_j)^2.
// A is row-major n_rows x n_cols. Returns x; optionally fills the unscaled
// covariance (A^T W A)^{-1}.
inline std::vector<double> weighted_lls(const std::vector<double>& a, const std::vector<double>& y,
                                        const std::vector<double>& w, std::size_t rows,
                                        std::size_t cols, std::vector<double>* covariance = nullptr,
                                        double* cond = nullptr) {
  std::vector<double> ata(cols * cols, 0.0), aty(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    for (std::size_t j = 0; j < cols; ++j) {
      const double aij = a[i * cols + j];
      aty[j] += wi * aij * y[i];
      for (std::size_t k = j; k < cols; ++k) ata[j * cols + k] += wi * aij * a[i * cols + k];
    }
  }
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t k = 0; k < j; ++k) ata[j * cols + k] = ata[k * cols + j];
  if (cond) *cond = condition_number(ata, cols);
  if (covariance) *covariance = invert_dense(ata, cols);
  return solve_dense(ata, aty, cols);
}

}  // namespace hfringe::detail
