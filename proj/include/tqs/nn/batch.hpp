#pragma once

#include <exception>
#include <mutex>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tqs/nn/params.hpp"

namespace tqs::nn {

// Accumulates per-element gradients over one batch into `master`'s grad
// tensors, summing in element order so serial and OpenMP runs are
// bit-identical (and independent of thread count). `fn(model, i, seed)`
// must run one element's forward/backward against the given model, leaving
// that element's gradient in the model's grad tensors, and return the
// element's loss contribution. Models are copied per worker; `fn` must not
// touch shared mutable state.
//
// Returns the summed loss. Master's grad tensors must be zeroed by the
// caller beforehand.
template <typename Model, typename Fn>
Real batch_gradients(Model& master, size_t n_elems, std::span<const uint64_t> seeds,
                     const Fn& fn) {
  if (n_elems == 0) return 0;
  auto master_refs = master.params();

  int workers = 1;
#ifdef _OPENMP
  if (n_elems >= 2) workers = std::min<int>(omp_get_max_threads(), int(n_elems));
#endif

  std::vector<std::vector<Real>> elem_grads(n_elems);
  std::vector<Real> elem_loss(n_elems, Real(0));
  std::exception_ptr error;
  std::mutex error_mutex;

  // One model copy per worker; copies share no state with the master.
  std::vector<Model> models(size_t(workers), master);

#pragma omp parallel for schedule(static) num_threads(workers)
  for (int64_t i = 0; i < int64_t(n_elems); ++i) {
    try {
      int w = 0;
#ifdef _OPENMP
      w = omp_get_thread_num();
#endif
      Model& model = models[size_t(w)];
      auto refs = model.params();
      zero_grads(refs);
      elem_loss[size_t(i)] = fn(model, size_t(i), seeds[size_t(i)]);
      elem_grads[size_t(i)] = flatten_grads(refs);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  Real total = 0;
  for (size_t i = 0; i < n_elems; ++i) {
    add_grads_from_flat(master_refs, elem_grads[i]);
    total += elem_loss[i];
  }
  return total;
}

}  // namespace tqs::nn
