#pragma once

#include <cstddef>
#include <vector>

#include "getnext/core/matrix.hpp"

namespace getnext::core {

// Compressed sparse row matrix. Used for graph propagation where the operator
// is constant during a forward/backward pass.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
               std::vector<std::size_t> col_idx, std::vector<double> values);

  static SparseMatrix from_dense(const Matrix& dense);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }

  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<std::size_t>& col_idx() const noexcept { return col_idx_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double at(std::size_t r, std::size_t c) const;

  Matrix to_dense() const;
  // Dense copy of the selected rows.
  Matrix rows_dense(const std::vector<std::size_t>& which) const;

  // this * b
  Matrix multiply(const Matrix& b) const;
  // this^T * b
  Matrix transpose_multiply(const Matrix& b) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

}  // namespace getnext::core
