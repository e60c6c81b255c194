#pragma once

// Dense matrix and Householder-QR least squares.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace fuzzeval {

// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> col(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  // Rows selected by index, in the given order (duplicates allowed).
  Matrix select_rows(std::span<const std::size_t> idx) const {
    Matrix m(idx.size(), cols_);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < cols_; ++c) m(i, c) = (*this)(idx[i], c);
    return m;
  }

  std::vector<double> multiply(std::span<const double> b) const {
    std::vector<double> out(rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < cols_; ++c) s += (*this)(r, c) * b[c];
      out[r] = s;
    }
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Householder QR factorization of a tall design, reusable for many
/// right-hand sides (the wild bootstrap refits the same design repeatedly).
///
/// A column whose component orthogonal to the preceding columns is below
/// `rel_tol` times its own norm is reported as rank deficient.
class QrLeastSquares {
 public:
  explicit QrLeastSquares(const Matrix& x, const std::vector<std::string>& labels = {}, double rel_tol = 1e-9)
      : n_(x.rows()), p_(x.cols()), a_(n_ * p_), beta_(p_) {
    if (p_ == 0) throw ComputeError("least squares: design has no columns");
    if (n_ < p_)
      throw ComputeError("least squares: " + std::to_string(n_) + " rows < " + std::to_string(p_) + " columns");
    for (std::size_t c = 0; c < p_; ++c)
      for (std::size_t r = 0; r < n_; ++r) at(r, c) = x(r, c);

    for (std::size_t k = 0; k < p_; ++k) {
      double orig = 0.0;
      for (std::size_t r = 0; r < n_; ++r) orig += x(r, k) * x(r, k);
      orig = std::sqrt(orig);

      double sigma = 0.0;
      for (std::size_t r = k; r < n_; ++r) sigma += at(r, k) * at(r, k);
      const double alpha_norm = std::sqrt(sigma);
      if (orig == 0.0 || alpha_norm <= rel_tol * orig) {
        throw RankDeficientError(k < labels.size() ? labels[k] : "column " + std::to_string(k));
      }
      const double x0 = at(k, k);
      const double alpha = x0 > 0 ? -alpha_norm : alpha_norm;
      // v = x - alpha e1, stored in place; beta = 2 / (v'v).
      const double v0 = x0 - alpha;
      at(k, k) = v0;
      const double vtv = sigma - x0 * x0 + v0 * v0;
      beta_[k] = 2.0 / vtv;
      for (std::size_t c = k + 1; c < p_; ++c) {
        double s = 0.0;
        for (std::size_t r = k; r < n_; ++r) s += at(r, k) * at(r, c);
        s *= beta_[k];
        for (std::size_t r = k; r < n_; ++r) at(r, c) -= s * at(r, k);
      }
      diag_.push_back(alpha);
    }
  }

  std::size_t rows() const noexcept { return n_; }
  std::size_t cols() const noexcept { return p_; }

  // Least-squares coefficients for response y.
  std::vector<double> solve(std::span<const double> y) const {
    if (y.size() != n_) throw ComputeError("least squares: response length does not match design");
    std::vector<double> qty(y.begin(), y.end());
    for (std::size_t k = 0; k < p_; ++k) {
      double s = 0.0;
      for (std::size_t r = k; r < n_; ++r) s += at(r, k) * qty[r];
      s *= beta_[k];
      for (std::size_t r = k; r < n_; ++r) qty[r] -= s * at(r, k);
    }
    std::vector<double> b(p_);
    for (std::size_t i = p_; i-- > 0;) {
      double s = qty[i];
      for (std::size_t c = i + 1; c < p_; ++c) s -= r_at(i, c) * b[c];
      b[i] = s / diag_[i];
    }
    return b;
  }

  // Diagonal of the hat matrix: squared row norms of the thin Q.
  std::vector<double> leverage() const {
    std::vector<double> h(n_, 0.0);
    std::vector<double> q(n_);
    for (std::size_t j = 0; j < p_; ++j) {
      std::fill(q.begin(), q.end(), 0.0);
      q[j] = 1.0;
      for (std::size_t k = std::min(j + 1, p_); k-- > 0;) {
        double s = 0.0;
        for (std::size_t r = k; r < n_; ++r) s += at(r, k) * q[r];
        s *= beta_[k];
        for (std::size_t r = k; r < n_; ++r) q[r] -= s * at(r, k);
      }
      for (std::size_t r = 0; r < n_; ++r) h[r] += q[r] * q[r];
    }
    return h;
  }

 private:
  double& at(std::size_t r, std::size_t c) { return a_[c * n_ + r]; }
  double at(std::size_t r, std::size_t c) const { return a_[c * n_ + r]; }
  // Strict upper triangle of R lives in the factored storage.
  double r_at(std::size_t r, std::size_t c) const { return a_[c * n_ + r]; }

  std::size_t n_;
  std::size_t p_;
  std::vector<double> a_;  // column-major
  std::vector<double> beta_;
  std::vector<double> diag_;
};

}  // namespace fuzzeval
