#pragma once

#include <span>
#include <string>
#include <vector>

#include "tqs/nn/params.hpp"
#include "tqs/rng.hpp"

namespace tqs::nn {

// Affine map y = W x + b with manual backward. Row forms operate on one
// time step per row so sequence-level projections run as matmuls.
struct Linear {
  Matrix w;  // out x in
  Matrix b;  // 1 x out
  Matrix gw, gb;

  Linear() = default;
  Linear(size_t out_dim, size_t in_dim, Rng& rng);

  size_t in_dim() const { return w.cols(); }
  size_t out_dim() const { return w.rows(); }

  void forward(std::span<const Real> x, std::span<Real> y) const;
  // Accumulates gw += dy x^T, gb += dy, dx += W^T dy.
  void backward(std::span<const Real> x, std::span<const Real> dy, std::span<Real> dx_acc);

  void forward_rows(const Matrix& x, Matrix& y) const;
  void backward_rows(const Matrix& x, const Matrix& dy, Matrix& dx_acc);

  std::vector<ParamRef> params(const std::string& prefix);
};

// Token-id to vector table.
struct Embedding {
  Matrix table;  // vocab x dim
  Matrix gtable;

  Embedding() = default;
  Embedding(size_t vocab_size, size_t dim, Rng& rng);

  size_t vocab_size() const { return table.rows(); }
  size_t dim() const { return table.cols(); }

  std::span<const Real> lookup(size_t id) const;
  void acc_grad(size_t id, std::span<const Real> d);

  std::vector<ParamRef> params(const std::string& prefix);
};

// Standard LSTM: sigmoid input/forget/output gates, tanh cell candidate,
//   c = f.c_prev + i.g ; h = o.tanh(c).
// Forget-gate bias starts at 1 so early gradients flow through time.
struct LstmCell {
  size_t input_dim = 0, hidden_dim = 0;
  Matrix wi, ui, bi;  // input gate
  Matrix wf, uf, bf;  // forget gate
  Matrix wo, uo, bo;  // output gate
  Matrix wg, ug, bg;  // cell candidate
  Matrix gwi, gui, gbi, gwf, guf, gbf, gwo, guo, gbo, gwg, gug, gbg;

  LstmCell() = default;
  LstmCell(size_t input_dim, size_t hidden_dim, Rng& rng);

  struct Cache {
    std::vector<Real> x, h_prev, c_prev;
    std::vector<Real> i, f, o, g, c, tanh_c;
  };

  void forward(std::span<const Real> x, std::span<const Real> h_prev,
               std::span<const Real> c_prev, std::span<Real> h_out, std::span<Real> c_out,
               Cache* cache = nullptr) const;
  // dh, dc are the losses' gradients w.r.t. this step's outputs; dx/dh_prev/
  // dc_prev accumulate, parameter gradients accumulate into g* members.
  void backward(const Cache& cache, std::span<const Real> dh, std::span<const Real> dc,
                std::span<Real> dx_acc, std::span<Real> dh_prev_acc,
                std::span<Real> dc_prev_acc);

  std::vector<ParamRef> params(const std::string& prefix);
};

// GRU with the h = (1-z).h_prev + z.h_tilde convention:
//   z = sig(Wz x + Uz h_prev + bz)
//   r = sig(Wr x + Ur h_prev + br)
//   h_tilde = tanh(Wh x + Uh (r.h_prev) + bh)
struct GruCell {
  size_t input_dim = 0, hidden_dim = 0;
  Matrix wz, uz, bz;
  Matrix wr, ur, br;
  Matrix wh, uh, bh;
  Matrix gwz, guz, gbz, gwr, gur, gbr, gwh, guh, gbh;

  GruCell() = default;
  GruCell(size_t input_dim, size_t hidden_dim, Rng& rng);

  struct Cache {
    std::vector<Real> x, h_prev;
    std::vector<Real> z, r, rh, h_tilde;
  };

  void forward(std::span<const Real> x, std::span<const Real> h_prev, std::span<Real> h_out,
               Cache* cache = nullptr) const;
  void backward(const Cache& cache, std::span<const Real> dh, std::span<Real> dx_acc,
                std::span<Real> dh_prev_acc);

  std::vector<ParamRef> params(const std::string& prefix);
};

// Convenience single-step wrappers matching the recurrence contracts.
std::pair<std::vector<Real>, std::vector<Real>> lstm_step(const LstmCell& cell,
                                                          std::span<const Real> x,
                                                          std::span<const Real> h_prev,
                                                          std::span<const Real> c_prev);
std::vector<Real> gru_step(const GruCell& cell, std::span<const Real> x,
                           std::span<const Real> h_prev);

}  // namespace tqs::nn
