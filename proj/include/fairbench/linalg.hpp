#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace fairbench {

// Row-major dense matrix of doubles. Just enough linear algebra for the
// reference models; no views, no expression templates.
struct DenseMatrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::int64_t r, std::int64_t c)
      : rows(r), cols(c), data(static_cast<std::size_t>(r * c), 0.0) {}

  double& operator()(std::int64_t i, std::int64_t j) {
    return data[static_cast<std::size_t>(i * cols + j)];
  }
  double operator()(std::int64_t i, std::int64_t j) const {
    return data[static_cast<std::size_t>(i * cols + j)];
  }

  bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }
};

// C = A * B
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions differ");
  DenseMatrix c(a.rows, b.cols);
  for (std::int64_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[static_cast<std::size_t>(i * a.cols)];
    double* crow = &c.data[static_cast<std::size_t>(i * c.cols)];
    for (std::int64_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = &b.data[static_cast<std::size_t>(k * b.cols)];
      for (std::int64_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

// C = A^T * B
inline DenseMatrix matmul_transA(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows) throw std::invalid_argument("matmul_transA: row counts differ");
  DenseMatrix c(a.cols, b.cols);
  for (std::int64_t k = 0; k < a.rows; ++k) {
    const double* arow = &a.data[static_cast<std::size_t>(k * a.cols)];
    const double* brow = &b.data[static_cast<std::size_t>(k * b.cols)];
    for (std::int64_t i = 0; i < a.cols; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = &c.data[static_cast<std::size_t>(i * c.cols)];
      for (std::int64_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

// C = A * B^T
inline DenseMatrix matmul_transB(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.cols) throw std::invalid_argument("matmul_transB: column counts differ");
  DenseMatrix c(a.rows, b.rows);
  for (std::int64_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[static_cast<std::size_t>(i * a.cols)];
    for (std::int64_t j = 0; j < b.rows; ++j) {
      const double* brow = &b.data[static_cast<std::size_t>(j * b.cols)];
      double acc = 0.0;
      for (std::int64_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
      c(i, j) = acc;
    }
  }
  return c;
}

inline void add_row_vector_inplace(DenseMatrix& a, const std::vector<double>& v) {
  if (static_cast<std::int64_t>(v.size()) != a.cols)
    throw std::invalid_argument("add_row_vector_inplace: length mismatch");
  for (std::int64_t i = 0; i < a.rows; ++i)
    for (std::int64_t j = 0; j < a.cols; ++j) a(i, j) += v[static_cast<std::size_t>(j)];
}

inline std::vector<double> column_sums(const DenseMatrix& a) {
  std::vector<double> s(static_cast<std::size_t>(a.cols), 0.0);
  for (std::int64_t i = 0; i < a.rows; ++i)
    for (std::int64_t j = 0; j < a.cols; ++j) s[static_cast<std::size_t>(j)] += a(i, j);
  return s;
}

}  // namespace fairbench
