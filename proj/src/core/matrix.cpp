#include "getnext/core/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "getnext/core/error.hpp"
#include "getnext/simd/kernels.hpp"

namespace getnext::core {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw ShapeError("Matrix: " + std::to_string(values_.size()) +
                     " values cannot fill " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer list");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::column_vector(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

void Matrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void gemm_accumulate(const Matrix& a, bool transpose_a, const Matrix& b,
                     bool transpose_b, Matrix& c) {
  const std::size_t m = transpose_a ? a.cols() : a.rows();
  const std::size_t k = transpose_a ? a.rows() : a.cols();
  const std::size_t kb = transpose_b ? b.cols() : b.rows();
  const std::size_t n = transpose_b ? b.rows() : b.cols();
  if (k != kb || c.rows() != m || c.cols() != n) {
    throw ShapeError("gemm: cannot multiply " + a.shape_string() +
                     (transpose_a ? "^T" : "") + " by " + b.shape_string() +
                     (transpose_b ? "^T" : "") + " into " + c.shape_string());
  }
  if (m == 0 || n == 0 || k == 0) return;
  const auto& kt = simd::active();
  if (transpose_a && transpose_b) {
    // Rare; materialize one side.
    const Matrix bt = transpose(b);
    kt.gemm_tn(a.data(), bt.data(), c.data(), m, k, n);
  } else if (transpose_a) {
    kt.gemm_tn(a.data(), b.data(), c.data(), m, k, n);
  } else if (transpose_b) {
    kt.gemm_nt(a.data(), b.data(), c.data(), m, k, n);
  } else {
    kt.gemm_nn(a.data(), b.data(), c.data(), m, k, n);
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  gemm_accumulate(a, false, b, false, c);
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("max_abs_diff: " + a.shape_string() + " vs " + b.shape_string());
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

}  // namespace getnext::core
