// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace vrft {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  bool same_shape(const Matrix& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// y = x^T M  (x has M.rows() entries, y has M.cols()).
inline void vec_mat(std::span<const double> x, const Matrix& m, std::span<double> y) {
  assert(x.size() == m.rows() && y.size() == m.cols());
  for (auto& v : y) v = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    const auto mr = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) y[c] += xr * mr[c];
  }
}

// y = M x  (x has M.cols() entries, y has M.rows()).
inline void mat_vec(const Matrix& m, std::span<const double> x, std::span<double> y) {
  assert(x.size() == m.cols() && y.size() == m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto mr = m.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) acc += mr[c] * x[c];
    y[r] = acc;
  }
}

// M += alpha * u v^T
inline void add_outer(Matrix& m, double alpha, std::span<const double> u,
                      std::span<const double> v) {
  assert(u.size() == m.rows() && v.size() == m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double ur = alpha * u[r];
    if (ur == 0.0) continue;
    auto mr = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) mr[c] += ur * v[c];
  }
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

/// Numerically stable log-sum-exp.
inline double log_sum_exp(std::span<const double> z) {
  double m = z[0];
  for (double v : z) m = v > m ? v : m;
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

inline void log_softmax(std::span<const double> z, std::span<double> out) {
  const double lse = log_sum_exp(z);
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
}

inline void softmax(std::span<const double> z, std::span<double> out) {
  double m = z[0];
  for (double v : z) m = v > m ? v : m;
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - m);
    s += out[i];
  }
  for (auto& v : out) v /= s;
}

}  // namespace vrft
