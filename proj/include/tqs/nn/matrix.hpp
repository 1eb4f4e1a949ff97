#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tqs/common.hpp"
#include "tqs/rng.hpp"

namespace tqs::nn {

// Dense row-major matrix. Construction from external data rejects NaN/Inf;
// in-place math is unchecked for speed, forward passes re-validate outputs.
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, Real(0)) {}

  static Matrix from_data(size_t rows, size_t cols, std::vector<Real> data);
  static Matrix uniform(size_t rows, size_t cols, Real lo, Real hi, Rng& rng);
  // Uniform in [-r, r] with r = sqrt(6 / (fan_in + fan_out)).
  static Matrix glorot(size_t rows, size_t cols, Rng& rng);

  Real& operator()(size_t i, size_t j) { return data_[i * cols_ + j]; }
  Real operator()(size_t i, size_t j) const { return data_[i * cols_ + j]; }

  std::span<Real> row(size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const Real> row(size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<Real> data() { return {data_.data(), data_.size()}; }
  std::span<const Real> data() const { return {data_.data(), data_.size()}; }

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  void set_zero() { std::fill(data_.begin(), data_.end(), Real(0)); }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

 private:
  size_t rows_ = 0, cols_ = 0;
  std::vector<Real> data_;
};

// Throws DivergenceError if any value is NaN/Inf; `what` names the tensor.
void check_finite(std::span<const Real> v, const std::string& what);

}  // namespace tqs::nn
