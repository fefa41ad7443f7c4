#include "getnext/core/sparse.hpp"

#include <algorithm>

#include "getnext/core/error.hpp"
#include "getnext/simd/kernels.hpp"

namespace getnext::core {

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols,
                           std::vector<std::size_t> row_ptr,
                           std::vector<std::size_t> col_idx, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (row_ptr_.size() != rows_ + 1 || col_idx_.size() != values_.size() ||
      row_ptr_.back() != values_.size()) {
    throw ShapeError("SparseMatrix: inconsistent CSR arrays");
  }
  for (std::size_t c : col_idx_) {
    if (c >= cols_) throw ShapeError("SparseMatrix: column index out of range");
  }
}

SparseMatrix SparseMatrix::from_dense(const Matrix& dense) {
  std::vector<std::size_t> ptr{0};
  std::vector<std::size_t> idx;
  std::vector<double> vals;
  for (std::size_t i = 0; i < dense.rows(); ++i) {
    for (std::size_t j = 0; j < dense.cols(); ++j) {
      if (dense(i, j) != 0.0) {
        idx.push_back(j);
        vals.push_back(dense(i, j));
      }
    }
    ptr.push_back(vals.size());
  }
  return SparseMatrix(dense.rows(), dense.cols(), std::move(ptr), std::move(idx),
                      std::move(vals));
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  const auto begin = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
  const auto end = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
  const auto it = std::lower_bound(begin, end, c);
  if (it == end || *it != c) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

Matrix SparseMatrix::to_dense() const {
  Matrix d(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) d(i, col_idx_[p]) = values_[p];
  return d;
}

Matrix SparseMatrix::rows_dense(const std::vector<std::size_t>& which) const {
  Matrix d(which.size(), cols_);
  for (std::size_t r = 0; r < which.size(); ++r) {
    const std::size_t i = which[r];
    if (i >= rows_) throw ShapeError("SparseMatrix::rows_dense: row out of range");
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) d(r, col_idx_[p]) = values_[p];
  }
  return d;
}

Matrix SparseMatrix::multiply(const Matrix& b) const {
  if (b.rows() != cols_) {
    throw ShapeError("spmm: cannot multiply sparse " + std::to_string(rows_) + "x" +
                     std::to_string(cols_) + " by " + b.shape_string());
  }
  Matrix out(rows_, b.cols());
  const auto& kt = simd::active();
  for (std::size_t i = 0; i < rows_; ++i) {
    double* orow = out.data() + i * b.cols();
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      kt.axpy(values_[p], b.data() + col_idx_[p] * b.cols(), orow, b.cols());
    }
  }
  return out;
}

Matrix SparseMatrix::transpose_multiply(const Matrix& b) const {
  if (b.rows() != rows_) {
    throw ShapeError("spmm^T: cannot multiply sparse transpose " + std::to_string(cols_) +
                     "x" + std::to_string(rows_) + " by " + b.shape_string());
  }
  Matrix out(cols_, b.cols());
  const auto& kt = simd::active();
  for (std::size_t i = 0; i < rows_; ++i) {
    const double* brow = b.data() + i * b.cols();
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      kt.axpy(values_[p], brow, out.data() + col_idx_[p] * b.cols(), b.cols());
    }
  }
  return out;
}

}  // namespace getnext::core
