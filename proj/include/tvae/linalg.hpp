// SPDX-License-Identifier: Apache-2.0
//
// Minimal dense row-major views and the handful of BLAS-2 kernels the decoder needs.

#pragma once

#include <cassert>
#include <cstddef>
#include <span>

namespace tvae {

template <typename T>
class MatrixView {
 public:
  MatrixView(T* data, std::size_t rows, std::size_t cols) : data_(data), rows_(rows), cols_(cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<T> row(std::size_t i) const { return {data_ + i * cols_, cols_}; }
  T* data() const { return data_; }

 private:
  T* data_;
  std::size_t rows_;
  std::size_t cols_;
};

using ConstMatrixView = MatrixView<const double>;

// y = A x + b
inline void gemv_bias(ConstMatrixView a, std::span<const double> x, std::span<const double> b, std::span<double> y) {
  assert(x.size() == a.cols() && y.size() == a.rows() && b.size() == a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* r = a.data() + i * a.cols();
    double acc = b[i];
    for (std::size_t j = 0; j < a.cols(); ++j) acc += r[j] * x[j];
    y[i] = acc;
  }
}

// y = A^T x
inline void gemv_transposed(ConstMatrixView a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == a.rows() && y.size() == a.cols());
  for (std::size_t j = 0; j < y.size(); ++j) y[j] = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* r = a.data() + i * a.cols();
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += r[j] * xi;
  }
}

// A += u v^T
inline void ger(MatrixView<double> a, std::span<const double> u, std::span<const double> v) {
  assert(u.size() == a.rows() && v.size() == a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double ui = u[i];
    if (ui == 0.0) continue;
    double* r = a.data() + i * a.cols();
    for (std::size_t j = 0; j < a.cols(); ++j) r[j] += ui * v[j];
  }
}

}  // namespace tvae
