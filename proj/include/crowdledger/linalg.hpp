// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace crowdledger::linalg {

/// Small dense row-major matrix. Sized for Jacobians (d <= 8) and OLS normal
/// equations (a handful of regressors), not for large problems.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  Matrix transpose() const;
  bool all_finite() const;

  friend Matrix operator*(const Matrix& a, const Matrix& b);
  friend Matrix operator+(const Matrix& a, const Matrix& b);
  friend Matrix operator-(const Matrix& a, const Matrix& b);
  friend Matrix operator*(double s, const Matrix& a);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::vector<double> operator*(const Matrix& a, std::span<const double> x);

struct QR {
  Matrix q;
  Matrix r;
};

/// Modified Gram-Schmidt on the columns of a square matrix. Diagonal of R is
/// non-negative.
QR qr_decompose(const Matrix& a);

/// Lower-triangular L with a = L Lᵀ. Returns false if `a` is not numerically
/// positive definite.
bool cholesky(const Matrix& a, Matrix& lower);

/// Solves (L Lᵀ) x = b given the Cholesky factor.
std::vector<double> cholesky_solve(const Matrix& lower, std::span<const double> b);

/// Inverse of L Lᵀ from its Cholesky factor.
Matrix cholesky_inverse(const Matrix& lower);

/// Real parts of the eigenvalues by unshifted QR iteration (A_{k+1} = R_k Q_k).
/// Stops when the strictly-lower part falls below `tol` or after `sweeps`.
std::vector<double> eigenvalues_qr(Matrix a, int sweeps = 50, double tol = 1e-12);

}  // namespace crowdledger::linalg
