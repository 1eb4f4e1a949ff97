// Times the serial reference kernels against their OpenMP counterparts, plus
// one realistic recurrent workload (LSTM sequence forward/backward). Both
// paths produce bit-identical results; this tool reports the speed side.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "tqs/nn/cells.hpp"
#include "tqs/nn/kernels.hpp"
#include "tqs/rng.hpp"

using namespace tqs;
using namespace tqs::nn;

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  auto start = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  auto end = Clock::now();
  return std::chrono::duration<double, std::milli>(end - start).count() / reps;
}

volatile Real g_sink = 0;

void bench_matmul(size_t n, int reps, Rng& rng) {
  Matrix a = Matrix::uniform(n, n, -1, 1, rng);
  Matrix b = Matrix::uniform(n, n, -1, 1, rng);
  Matrix c(n, n);
  double serial = time_ms([&] { matmul_serial(a, b, c); }, reps);
  g_sink = c(0, 0);
  double parallel = time_ms([&] { matmul_parallel(a, b, c); }, reps);
  g_sink = c(0, 0);
  std::printf("matmul      %5zux%-5zu  serial %9.3f ms   openmp %9.3f ms   speedup %.2fx\n", n, n,
              serial, parallel, serial / parallel);
}

void bench_matvec(size_t n, int reps, Rng& rng) {
  Matrix a = Matrix::uniform(n, n, -1, 1, rng);
  std::vector<Real> x(n, Real(0.5)), y(n);
  double serial = time_ms([&] { matvec_serial(a, x, y); }, reps);
  g_sink = y[0];
  double parallel = time_ms([&] { matvec_parallel(a, x, y); }, reps);
  g_sink = y[0];
  std::printf("matvec      %5zux%-5zu  serial %9.3f ms   openmp %9.3f ms   speedup %.2fx\n", n, n,
              serial, parallel, serial / parallel);
}

void bench_lstm(size_t hidden, size_t steps, int reps, Rng& rng) {
  LstmCell cell(hidden, hidden, rng);
  std::vector<Real> x(hidden, Real(0.1)), h(hidden), c(hidden), hn(hidden), cn(hidden);
  std::vector<Real> dh(hidden, Real(0.01)), dc(hidden), dx(hidden), dhp(hidden), dcp(hidden);
  auto run = [&] {
    std::vector<LstmCell::Cache> caches(steps);
    std::fill(h.begin(), h.end(), Real(0));
    std::fill(c.begin(), c.end(), Real(0));
    for (size_t t = 0; t < steps; ++t) {
      cell.forward(x, h, c, hn, cn, &caches[t]);
      h = hn;
      c = cn;
    }
    for (size_t t = steps; t-- > 0;) {
      std::fill(dx.begin(), dx.end(), Real(0));
      std::fill(dhp.begin(), dhp.end(), Real(0));
      std::fill(dcp.begin(), dcp.end(), Real(0));
      cell.backward(caches[t], dh, dc, dx, dhp, dcp);
    }
    g_sink = h[0];
  };
  set_exec_mode(ExecMode::Serial);
  double serial = time_ms(run, reps);
  set_exec_mode(ExecMode::Parallel);
  double parallel = time_ms(run, reps);
  set_exec_mode(ExecMode::Auto);
  std::printf("lstm fwd+bwd  H=%-4zu T=%-3zu serial %9.3f ms   openmp %9.3f ms   speedup %.2fx\n",
              hidden, steps, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  int reps = argc > 1 ? std::atoi(argv[1]) : 5;
  if (reps < 1) reps = 1;
  Rng rng(42);
  std::printf("threads available: %d\n", max_threads());
  for (size_t n : {64, 128, 256, 512}) bench_matvec(n, reps * 20, rng);
  for (size_t n : {64, 128, 256, 512}) bench_matmul(n, reps, rng);
  bench_lstm(128, 32, reps, rng);
  bench_lstm(512, 32, reps, rng);
  return 0;
}
