#include "tqs/nn/matrix.hpp"

namespace tqs::nn {

Matrix Matrix::from_data(size_t rows, size_t cols, std::vector<Real> data) {
  if (data.size() != rows * cols)
    throw ShapeError("Matrix::from_data: " + std::to_string(data.size()) +
                     " values for shape " + std::to_string(rows) + "x" + std::to_string(cols));
  for (Real v : data)
    if (!std::isfinite(v)) throw DivergenceError("Matrix::from_data: non-finite value");
  Matrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.data_ = std::move(data);
  return m;
}

Matrix Matrix::uniform(size_t rows, size_t cols, Real lo, Real hi, Rng& rng) {
  Matrix m(rows, cols);
  for (Real& v : m.data_) v = rng.uniform(lo, hi);
  return m;
}

Matrix Matrix::glorot(size_t rows, size_t cols, Rng& rng) {
  Real r = std::sqrt(Real(6) / Real(rows + cols));
  return uniform(rows, cols, -r, r, rng);
}

void check_finite(std::span<const Real> v, const std::string& what) {
  for (Real x : v)
    if (!std::isfinite(x)) throw DivergenceError("non-finite value in " + what);
}

}  // namespace tqs::nn
