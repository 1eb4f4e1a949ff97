#pragma once

#include <span>

#include "tqs/nn/matrix.hpp"

namespace tqs::nn {

// Dense kernels come in serial and OpenMP flavors. Both compute every output
// element with the same inner-loop order, so results are bit-identical; the
// serial versions double as the reference implementation in tests and the
// benchmark baseline. Dispatch is by mode and problem size.
enum class ExecMode { Serial, Parallel, Auto };

void set_exec_mode(ExecMode mode);
ExecMode exec_mode();
int max_threads();

// y = A x (+ bias)
void matvec(const Matrix& a, std::span<const Real> x, std::span<Real> y,
            std::span<const Real> bias = {});
// y += A^T x
void matvec_t_acc(const Matrix& a, std::span<const Real> x, std::span<Real> y);
// G += u v^T
void outer_acc(Matrix& g, std::span<const Real> u, std::span<const Real> v);
// C = A B
void matmul(const Matrix& a, const Matrix& b, Matrix& c);
// C = A B^T
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c);
// C += A^T B
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);

// Serial references, exposed for the agreement tests and the benchmark.
void matvec_serial(const Matrix& a, std::span<const Real> x, std::span<Real> y,
                   std::span<const Real> bias = {});
void matvec_t_acc_serial(const Matrix& a, std::span<const Real> x, std::span<Real> y);
void outer_acc_serial(Matrix& g, std::span<const Real> u, std::span<const Real> v);
void matmul_serial(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_nt_serial(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_tn_acc_serial(const Matrix& a, const Matrix& b, Matrix& c);

// OpenMP versions (fall back to serial when built without OpenMP).
void matvec_parallel(const Matrix& a, std::span<const Real> x, std::span<Real> y,
                     std::span<const Real> bias = {});
void matvec_t_acc_parallel(const Matrix& a, std::span<const Real> x, std::span<Real> y);
void outer_acc_parallel(Matrix& g, std::span<const Real> u, std::span<const Real> v);
void matmul_parallel(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_nt_parallel(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_tn_acc_parallel(const Matrix& a, const Matrix& b, Matrix& c);

// Small elementwise helpers.
inline void axpy(Real alpha, std::span<const Real> x, std::span<Real> y) {
  for (size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

inline void add_inplace(std::span<Real> y, std::span<const Real> x) {
  for (size_t i = 0; i < y.size(); ++i) y[i] += x[i];
}

inline Real dot(std::span<const Real> a, std::span<const Real> b) {
  Real s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace tqs::nn
