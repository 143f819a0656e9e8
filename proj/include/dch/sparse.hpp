// Compressed-sparse-row matrix with deterministic triplet assembly, plus a
// plain conjugate-gradient solve for SPD systems (mass solves).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace dch {

struct Triplet {
  int row;
  int col;
  double value;
};

class SparseMatrix {
 public:
  SparseMatrix() = default;

  // Builds CSR from triplets; duplicates are summed in insertion order so the
  // result is bit-reproducible for a fixed triplet sequence.
  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> t) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("from_triplets: negative shape");
    std::stable_sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.row_ptr_.assign(static_cast<std::size_t>(rows) + 1, 0);
    for (std::size_t k = 0; k < t.size();) {
      const int r = t[k].row;
      const int c = t[k].col;
      if (r < 0 || r >= rows || c < 0 || c >= cols)
        throw std::invalid_argument("from_triplets: index out of range");
      double v = 0.0;
      while (k < t.size() && t[k].row == r && t[k].col == c) v += t[k++].value;
      m.col_idx_.push_back(c);
      m.val_.push_back(v);
      ++m.row_ptr_[static_cast<std::size_t>(r) + 1];
    }
    for (std::size_t r = 0; r < static_cast<std::size_t>(rows); ++r)
      m.row_ptr_[r + 1] += m.row_ptr_[r];
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return val_.size(); }

  std::span<const int> row_cols(int i) const {
    return {col_idx_.data() + row_ptr_[static_cast<std::size_t>(i)],
            col_idx_.data() + row_ptr_[static_cast<std::size_t>(i) + 1]};
  }
  std::span<const double> row_vals(int i) const {
    return {val_.data() + row_ptr_[static_cast<std::size_t>(i)],
            val_.data() + row_ptr_[static_cast<std::size_t>(i) + 1]};
  }

  // Stored value at (i,j), 0 if the slot is absent.
  double at(int i, int j) const {
    const auto cols = row_cols(i);
    const auto it = std::lower_bound(cols.begin(), cols.end(), j);
    if (it == cols.end() || *it != j) return 0.0;
    return row_vals(i)[static_cast<std::size_t>(it - cols.begin())];
  }

  // Index into values() for slot (i,j); -1 if absent.
  int slot(int i, int j) const {
    const auto cols = row_cols(i);
    const auto it = std::lower_bound(cols.begin(), cols.end(), j);
    if (it == cols.end() || *it != j) return -1;
    return static_cast<int>(row_ptr_[static_cast<std::size_t>(i)] + (it - cols.begin()));
  }

  std::vector<double>& values() { return val_; }
  const std::vector<double>& values() const { return val_; }

  void mul(std::span<const double> x, std::span<double> y) const {
    if (static_cast<int>(x.size()) != cols_ || static_cast<int>(y.size()) != rows_)
      throw std::invalid_argument("SparseMatrix::mul: size mismatch");
    for (int i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[static_cast<std::size_t>(i)];
           k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k)
        s += val_[k] * x[static_cast<std::size_t>(col_idx_[k])];
      y[static_cast<std::size_t>(i)] = s;
    }
  }

  std::vector<double> mul(const std::vector<double>& x) const {
    std::vector<double> y(static_cast<std::size_t>(rows_));
    mul(x, y);
    return y;
  }

  // y = A^T x.
  void mul_transpose(std::span<const double> x, std::span<double> y) const {
    if (static_cast<int>(x.size()) != rows_ || static_cast<int>(y.size()) != cols_)
      throw std::invalid_argument("SparseMatrix::mul_transpose: size mismatch");
    std::fill(y.begin(), y.end(), 0.0);
    for (int i = 0; i < rows_; ++i) {
      const double xi = x[static_cast<std::size_t>(i)];
      for (std::size_t k = row_ptr_[static_cast<std::size_t>(i)];
           k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k)
        y[static_cast<std::size_t>(col_idx_[k])] += val_[k] * xi;
    }
  }

  std::vector<double> mul_transpose(const std::vector<double>& x) const {
    std::vector<double> y(static_cast<std::size_t>(cols_));
    mul_transpose(x, y);
    return y;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<int> col_idx_;
  std::vector<double> val_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// x^T A y.
inline double quad_form(const SparseMatrix& a, const std::vector<double>& x,
                        const std::vector<double>& y) {
  return dot(x, a.mul(y));
}

// Conjugate gradients for SPD systems. Returns iterations used; throws if the
// relative residual does not reach tol within maxit.
inline int cg_solve(const SparseMatrix& a, std::span<const double> b,
                    std::vector<double>& x, double tol = 1e-14, int maxit = 1000) {
  const std::size_t n = b.size();
  if (x.size() != n) x.assign(n, 0.0);
  std::vector<double> r(n), p(n), ap(n);
  a.mul(x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  p = r;
  double rr = dot(r, r);
  const double bnorm = std::sqrt(std::max(dot(b, b), 1e-300));
  for (int it = 0; it < maxit; ++it) {
    if (std::sqrt(rr) <= tol * bnorm) return it;
    a.mul(p, ap);
    const double alpha = rr / dot(p, ap);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  if (std::sqrt(rr) <= tol * bnorm) return maxit;
  throw std::runtime_error("cg_solve: no convergence");
}

}  // namespace dch
