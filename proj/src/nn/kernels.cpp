#include "tqs/nn/kernels.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tqs::nn {

namespace {

std::atomic<ExecMode> g_mode{ExecMode::Auto};

// Below this many multiply-adds the fork/join overhead dominates on small
// recurrent cells, so Auto stays serial.
constexpr size_t kMinParallelWork = 1 << 15;

bool go_parallel(size_t work) {
#ifdef _OPENMP
  switch (g_mode.load(std::memory_order_relaxed)) {
    case ExecMode::Serial:
      return false;
    case ExecMode::Parallel:
      return true;
    case ExecMode::Auto:
      return work >= kMinParallelWork && omp_get_max_threads() > 1;
  }
#else
  (void)work;
#endif
  return false;
}

// Per-element bodies shared by the serial and OpenMP variants. Keeping the
// inner summation order identical makes the two paths bit-identical.
inline Real row_dot(const Matrix& a, size_t i, std::span<const Real> x) {
  std::span<const Real> r = a.row(i);
  Real s = 0;
  for (size_t j = 0; j < r.size(); ++j) s += r[j] * x[j];
  return s;
}

inline Real col_dot(const Matrix& a, size_t j, std::span<const Real> x) {
  Real s = 0;
  for (size_t i = 0; i < a.rows(); ++i) s += a(i, j) * x[i];
  return s;
}

inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& c, size_t i) {
  std::span<Real> ci = c.row(i);
  std::fill(ci.begin(), ci.end(), Real(0));
  for (size_t k = 0; k < a.cols(); ++k) {
    Real aik = a(i, k);
    std::span<const Real> bk = b.row(k);
    for (size_t j = 0; j < ci.size(); ++j) ci[j] += aik * bk[j];
  }
}

inline void matmul_tn_row(const Matrix& a, const Matrix& b, Matrix& c, size_t i) {
  std::span<Real> ci = c.row(i);
  for (size_t t = 0; t < a.rows(); ++t) {
    Real ati = a(t, i);
    std::span<const Real> bt = b.row(t);
    for (size_t j = 0; j < ci.size(); ++j) ci[j] += ati * bt[j];
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace

void set_exec_mode(ExecMode mode) { g_mode.store(mode, std::memory_order_relaxed); }
ExecMode exec_mode() { return g_mode.load(std::memory_order_relaxed); }

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// ---- matvec: y = A x (+ bias) ----

void matvec_serial(const Matrix& a, std::span<const Real> x, std::span<Real> y,
                   std::span<const Real> bias) {
  require(x.size() == a.cols() && y.size() == a.rows(), "matvec: dimension mismatch");
  require(bias.empty() || bias.size() == a.rows(), "matvec: bias dimension mismatch");
  for (size_t i = 0; i < a.rows(); ++i)
    y[i] = row_dot(a, i, x) + (bias.empty() ? Real(0) : bias[i]);
}

void matvec_parallel(const Matrix& a, std::span<const Real> x, std::span<Real> y,
                     std::span<const Real> bias) {
  require(x.size() == a.cols() && y.size() == a.rows(), "matvec: dimension mismatch");
  require(bias.empty() || bias.size() == a.rows(), "matvec: bias dimension mismatch");
  const int64_t n = int64_t(a.rows());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i)
    y[i] = row_dot(a, size_t(i), x) + (bias.empty() ? Real(0) : bias[i]);
}

void matvec(const Matrix& a, std::span<const Real> x, std::span<Real> y,
            std::span<const Real> bias) {
  if (go_parallel(a.size()))
    matvec_parallel(a, x, y, bias);
  else
    matvec_serial(a, x, y, bias);
}

// ---- matvec_t_acc: y += A^T x ----

void matvec_t_acc_serial(const Matrix& a, std::span<const Real> x, std::span<Real> y) {
  require(x.size() == a.rows() && y.size() == a.cols(), "matvec_t_acc: dimension mismatch");
  for (size_t j = 0; j < a.cols(); ++j) y[j] += col_dot(a, j, x);
}

void matvec_t_acc_parallel(const Matrix& a, std::span<const Real> x, std::span<Real> y) {
  require(x.size() == a.rows() && y.size() == a.cols(), "matvec_t_acc: dimension mismatch");
  const int64_t n = int64_t(a.cols());
#pragma omp parallel for schedule(static)
  for (int64_t j = 0; j < n; ++j) y[j] += col_dot(a, size_t(j), x);
}

void matvec_t_acc(const Matrix& a, std::span<const Real> x, std::span<Real> y) {
  if (go_parallel(a.size()))
    matvec_t_acc_parallel(a, x, y);
  else
    matvec_t_acc_serial(a, x, y);
}

// ---- outer_acc: G += u v^T ----

void outer_acc_serial(Matrix& g, std::span<const Real> u, std::span<const Real> v) {
  require(u.size() == g.rows() && v.size() == g.cols(), "outer_acc: dimension mismatch");
  for (size_t i = 0; i < g.rows(); ++i) {
    std::span<Real> gi = g.row(i);
    Real ui = u[i];
    for (size_t j = 0; j < gi.size(); ++j) gi[j] += ui * v[j];
  }
}

void outer_acc_parallel(Matrix& g, std::span<const Real> u, std::span<const Real> v) {
  require(u.size() == g.rows() && v.size() == g.cols(), "outer_acc: dimension mismatch");
  const int64_t n = int64_t(g.rows());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    std::span<Real> gi = g.row(size_t(i));
    Real ui = u[i];
    for (size_t j = 0; j < gi.size(); ++j) gi[j] += ui * v[j];
  }
}

void outer_acc(Matrix& g, std::span<const Real> u, std::span<const Real> v) {
  if (go_parallel(g.size()))
    outer_acc_parallel(g, u, v);
  else
    outer_acc_serial(g, u, v);
}

// ---- matmul family ----

void matmul_serial(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.cols() == b.rows() && c.rows() == a.rows() && c.cols() == b.cols(),
          "matmul: dimension mismatch");
  for (size_t i = 0; i < a.rows(); ++i) matmul_row(a, b, c, i);
}

void matmul_parallel(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.cols() == b.rows() && c.rows() == a.rows() && c.cols() == b.cols(),
          "matmul: dimension mismatch");
  const int64_t n = int64_t(a.rows());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) matmul_row(a, b, c, size_t(i));
}

void matmul(const Matrix& a, const Matrix& b, Matrix& c) {
  if (go_parallel(a.rows() * b.cols() * a.cols()))
    matmul_parallel(a, b, c);
  else
    matmul_serial(a, b, c);
}

void matmul_nt_serial(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.cols() == b.cols() && c.rows() == a.rows() && c.cols() == b.rows(),
          "matmul_nt: dimension mismatch");
  for (size_t i = 0; i < a.rows(); ++i)
    for (size_t j = 0; j < b.rows(); ++j) c(i, j) = dot(a.row(i), b.row(j));
}

void matmul_nt_parallel(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.cols() == b.cols() && c.rows() == a.rows() && c.cols() == b.rows(),
          "matmul_nt: dimension mismatch");
  const int64_t n = int64_t(a.rows());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i)
    for (size_t j = 0; j < b.rows(); ++j) c(size_t(i), j) = dot(a.row(size_t(i)), b.row(j));
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  if (go_parallel(a.rows() * b.rows() * a.cols()))
    matmul_nt_parallel(a, b, c);
  else
    matmul_nt_serial(a, b, c);
}

void matmul_tn_acc_serial(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.rows() == b.rows() && c.rows() == a.cols() && c.cols() == b.cols(),
          "matmul_tn_acc: dimension mismatch");
  for (size_t i = 0; i < c.rows(); ++i) matmul_tn_row(a, b, c, i);
}

void matmul_tn_acc_parallel(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.rows() == b.rows() && c.rows() == a.cols() && c.cols() == b.cols(),
          "matmul_tn_acc: dimension mismatch");
  const int64_t n = int64_t(c.rows());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) matmul_tn_row(a, b, c, size_t(i));
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  if (go_parallel(a.rows() * a.cols() * b.cols()))
    matmul_tn_acc_parallel(a, b, c);
  else
    matmul_tn_acc_serial(a, b, c);
}

}  // namespace tqs::nn
