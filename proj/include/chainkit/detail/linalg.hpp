#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace chainkit::detail {

/// Minimal dense row-major matrix for the truncation-sized problems the
/// solvers deal with.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(std::size_t(rows) * cols, 0.0) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int i, int j) { return data_[std::size_t(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[std::size_t(i) * cols_ + j]; }
  double* row_ptr(int i) { return data_.data() + std::size_t(i) * cols_; }
  const double* row_ptr(int i) const { return data_.data() + std::size_t(i) * cols_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

/// C = A * B with an accumulation order that keeps B row-contiguous.
inline Matrix multiply(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    double* out = c.row_ptr(i);
    const double* arow = a.row_ptr(i);
    for (int k = 0; k < a.cols(); ++k) {
      double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row_ptr(k);
      for (int j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

/// y = x^T * A for a row vector x.
inline std::vector<double> left_multiply(const std::vector<double>& x, const Matrix& a) {
  std::vector<double> y(std::size_t(a.cols()), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    double xi = x[std::size_t(i)];
    if (xi == 0.0) continue;
    const double* arow = a.row_ptr(i);
    for (int j = 0; j < a.cols(); ++j) y[std::size_t(j)] += xi * arow[j];
  }
  return y;
}

/// Solves A x = b in place by LU with partial pivoting. Returns false if a
/// pivot vanishes (singular to working precision).
inline bool solve_linear(Matrix a, std::vector<double> b, std::vector<double>& x) {
  int n = a.rows();
  std::vector<int> perm(std::size_t(n), 0);
  for (int i = 0; i < n; ++i) perm[std::size_t(i)] = i;

  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::abs(a(col, col));
    for (int r = col + 1; r < n; ++r) {
      double v = std::abs(a(r, col));
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (!(best > 0.0) || !std::isfinite(best)) return false;
    if (pivot != col) {
      for (int j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
      std::swap(b[std::size_t(col)], b[std::size_t(pivot)]);
    }
    double inv = 1.0 / a(col, col);
    for (int r = col + 1; r < n; ++r) {
      double factor = a(r, col) * inv;
      if (factor == 0.0) continue;
      a(r, col) = 0.0;
      for (int j = col + 1; j < n; ++j) a(r, j) -= factor * a(col, j);
      b[std::size_t(r)] -= factor * b[std::size_t(col)];
    }
  }
  x.assign(std::size_t(n), 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double sum = b[std::size_t(r)];
    for (int j = r + 1; j < n; ++j) sum -= a(r, j) * x[std::size_t(j)];
    x[std::size_t(r)] = sum / a(r, r);
  }
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace chainkit::detail
