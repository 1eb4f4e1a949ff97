#include "tqs/nn/cells.hpp"

#include <cmath>

#include "tqs/nn/kernels.hpp"
#include "tqs/nn/ops.hpp"

namespace tqs::nn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

std::span<const Real> bias_row(const Matrix& b) { return b.row(0); }

}  // namespace

// ---- Linear ----

Linear::Linear(size_t out_dim, size_t in_dim, Rng& rng)
    : w(Matrix::glorot(out_dim, in_dim, rng)),
      b(1, out_dim),
      gw(out_dim, in_dim),
      gb(1, out_dim) {}

void Linear::forward(std::span<const Real> x, std::span<Real> y) const {
  matvec(w, x, y, bias_row(b));
}

void Linear::backward(std::span<const Real> x, std::span<const Real> dy,
                      std::span<Real> dx_acc) {
  outer_acc(gw, dy, x);
  add_inplace(gb.row(0), dy);
  matvec_t_acc(w, dy, dx_acc);
}

void Linear::forward_rows(const Matrix& x, Matrix& y) const {
  require(x.cols() == w.cols() && y.rows() == x.rows() && y.cols() == w.rows(),
          "Linear::forward_rows: dimension mismatch");
  matmul_nt(x, w, y);
  for (size_t t = 0; t < y.rows(); ++t) add_inplace(y.row(t), bias_row(b));
}

void Linear::backward_rows(const Matrix& x, const Matrix& dy, Matrix& dx_acc) {
  require(dy.rows() == x.rows() && dy.cols() == w.rows() && dx_acc.same_shape(x),
          "Linear::backward_rows: mismatch");
  matmul_tn_acc(dy, x, gw);  // gw += dy^T x
  for (size_t t = 0; t < dy.rows(); ++t) add_inplace(gb.row(0), dy.row(t));
  Matrix dx(x.rows(), x.cols());
  matmul(dy, w, dx);  // dx = dy W
  for (size_t t = 0; t < dx.rows(); ++t) add_inplace(dx_acc.row(t), dx.row(t));
}

std::vector<ParamRef> Linear::params(const std::string& prefix) {
  return {{prefix + ".w", &w, &gw}, {prefix + ".b", &b, &gb}};
}

// ---- Embedding ----

Embedding::Embedding(size_t vocab_size, size_t dim, Rng& rng)
    : table(Matrix::glorot(vocab_size, dim, rng)), gtable(vocab_size, dim) {}

std::span<const Real> Embedding::lookup(size_t id) const {
  require(id < table.rows(), "Embedding::lookup: id out of range");
  return table.row(id);
}

void Embedding::acc_grad(size_t id, std::span<const Real> d) {
  require(id < gtable.rows() && d.size() == gtable.cols(), "Embedding::acc_grad: mismatch");
  add_inplace(gtable.row(id), d);
}

std::vector<ParamRef> Embedding::params(const std::string& prefix) {
  return {{prefix + ".table", &table, &gtable}};
}

// ---- LSTM ----

LstmCell::LstmCell(size_t input_dim_, size_t hidden_dim_, Rng& rng)
    : input_dim(input_dim_), hidden_dim(hidden_dim_) {
  auto weight = [&](Matrix& m, size_t r, size_t c) { m = Matrix::glorot(r, c, rng); };
  weight(wi, hidden_dim, input_dim);
  weight(ui, hidden_dim, hidden_dim);
  weight(wf, hidden_dim, input_dim);
  weight(uf, hidden_dim, hidden_dim);
  weight(wo, hidden_dim, input_dim);
  weight(uo, hidden_dim, hidden_dim);
  weight(wg, hidden_dim, input_dim);
  weight(ug, hidden_dim, hidden_dim);
  bi = Matrix(1, hidden_dim);
  bf = Matrix(1, hidden_dim);
  bo = Matrix(1, hidden_dim);
  bg = Matrix(1, hidden_dim);
  for (Real& v : bf.data()) v = Real(1);

  gwi = Matrix(hidden_dim, input_dim);
  gui = Matrix(hidden_dim, hidden_dim);
  gwf = Matrix(hidden_dim, input_dim);
  guf = Matrix(hidden_dim, hidden_dim);
  gwo = Matrix(hidden_dim, input_dim);
  guo = Matrix(hidden_dim, hidden_dim);
  gwg = Matrix(hidden_dim, input_dim);
  gug = Matrix(hidden_dim, hidden_dim);
  gbi = Matrix(1, hidden_dim);
  gbf = Matrix(1, hidden_dim);
  gbo = Matrix(1, hidden_dim);
  gbg = Matrix(1, hidden_dim);
}

void LstmCell::forward(std::span<const Real> x, std::span<const Real> h_prev,
                       std::span<const Real> c_prev, std::span<Real> h_out,
                       std::span<Real> c_out, Cache* cache) const {
  require(x.size() == input_dim && h_prev.size() == hidden_dim && c_prev.size() == hidden_dim &&
              h_out.size() == hidden_dim && c_out.size() == hidden_dim,
          "lstm_step: dimension mismatch");
  const size_t H = hidden_dim;
  std::vector<Real> i(H), f(H), o(H), g(H), rec(H);

  auto gate = [&](const Matrix& w, const Matrix& u, const Matrix& b, std::vector<Real>& out,
                  bool tanh_act) {
    matvec(w, x, out, bias_row(b));
    matvec(u, h_prev, rec);
    for (size_t j = 0; j < H; ++j) {
      Real a = out[j] + rec[j];
      out[j] = tanh_act ? std::tanh(a) : sigmoid(a);
    }
  };
  gate(wi, ui, bi, i, false);
  gate(wf, uf, bf, f, false);
  gate(wo, uo, bo, o, false);
  gate(wg, ug, bg, g, true);

  std::vector<Real> tanh_c(H);
  for (size_t j = 0; j < H; ++j) {
    c_out[j] = f[j] * c_prev[j] + i[j] * g[j];
    tanh_c[j] = std::tanh(c_out[j]);
    h_out[j] = o[j] * tanh_c[j];
  }
  check_finite(h_out, "lstm h");
  check_finite(c_out, "lstm c");

  if (cache) {
    cache->x.assign(x.begin(), x.end());
    cache->h_prev.assign(h_prev.begin(), h_prev.end());
    cache->c_prev.assign(c_prev.begin(), c_prev.end());
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->o = std::move(o);
    cache->g = std::move(g);
    cache->c.assign(c_out.begin(), c_out.end());
    cache->tanh_c = std::move(tanh_c);
  }
}

void LstmCell::backward(const Cache& cache, std::span<const Real> dh, std::span<const Real> dc,
                        std::span<Real> dx_acc, std::span<Real> dh_prev_acc,
                        std::span<Real> dc_prev_acc) {
  const size_t H = hidden_dim;
  require(dh.size() == H && dc.size() == H && dx_acc.size() == input_dim &&
              dh_prev_acc.size() == H && dc_prev_acc.size() == H,
          "lstm backward: dimension mismatch");

  std::vector<Real> ai(H), af(H), ao(H), ag(H);
  for (size_t j = 0; j < H; ++j) {
    Real o = cache.o[j], i = cache.i[j], f = cache.f[j], g = cache.g[j];
    Real tc = cache.tanh_c[j];
    Real dct = dc[j] + dh[j] * o * (Real(1) - tc * tc);
    ao[j] = dh[j] * tc * o * (Real(1) - o);
    ai[j] = dct * g * i * (Real(1) - i);
    af[j] = dct * cache.c_prev[j] * f * (Real(1) - f);
    ag[j] = dct * i * (Real(1) - g * g);
    dc_prev_acc[j] += dct * f;
  }

  auto gate_grads = [&](const Matrix& w, const Matrix& u, Matrix& gw, Matrix& gu, Matrix& gb,
                        const std::vector<Real>& a) {
    outer_acc(gw, a, cache.x);
    outer_acc(gu, a, cache.h_prev);
    add_inplace(gb.row(0), a);
    matvec_t_acc(w, a, dx_acc);
    matvec_t_acc(u, a, dh_prev_acc);
  };
  gate_grads(wi, ui, gwi, gui, gbi, ai);
  gate_grads(wf, uf, gwf, guf, gbf, af);
  gate_grads(wo, uo, gwo, guo, gbo, ao);
  gate_grads(wg, ug, gwg, gug, gbg, ag);
}

std::vector<ParamRef> LstmCell::params(const std::string& p) {
  return {{p + ".wi", &wi, &gwi}, {p + ".ui", &ui, &gui}, {p + ".bi", &bi, &gbi},
          {p + ".wf", &wf, &gwf}, {p + ".uf", &uf, &guf}, {p + ".bf", &bf, &gbf},
          {p + ".wo", &wo, &gwo}, {p + ".uo", &uo, &guo}, {p + ".bo", &bo, &gbo},
          {p + ".wg", &wg, &gwg}, {p + ".ug", &ug, &gug}, {p + ".bg", &bg, &gbg}};
}

// ---- GRU ----

GruCell::GruCell(size_t input_dim_, size_t hidden_dim_, Rng& rng)
    : input_dim(input_dim_), hidden_dim(hidden_dim_) {
  wz = Matrix::glorot(hidden_dim, input_dim, rng);
  uz = Matrix::glorot(hidden_dim, hidden_dim, rng);
  wr = Matrix::glorot(hidden_dim, input_dim, rng);
  ur = Matrix::glorot(hidden_dim, hidden_dim, rng);
  wh = Matrix::glorot(hidden_dim, input_dim, rng);
  uh = Matrix::glorot(hidden_dim, hidden_dim, rng);
  bz = Matrix(1, hidden_dim);
  br = Matrix(1, hidden_dim);
  bh = Matrix(1, hidden_dim);

  gwz = Matrix(hidden_dim, input_dim);
  guz = Matrix(hidden_dim, hidden_dim);
  gwr = Matrix(hidden_dim, input_dim);
  gur = Matrix(hidden_dim, hidden_dim);
  gwh = Matrix(hidden_dim, input_dim);
  guh = Matrix(hidden_dim, hidden_dim);
  gbz = Matrix(1, hidden_dim);
  gbr = Matrix(1, hidden_dim);
  gbh = Matrix(1, hidden_dim);
}

void GruCell::forward(std::span<const Real> x, std::span<const Real> h_prev,
                      std::span<Real> h_out, Cache* cache) const {
  require(x.size() == input_dim && h_prev.size() == hidden_dim && h_out.size() == hidden_dim,
          "gru_step: dimension mismatch");
  const size_t H = hidden_dim;
  std::vector<Real> z(H), r(H), rh(H), h_tilde(H), rec(H);

  matvec(wz, x, z, bias_row(bz));
  matvec(uz, h_prev, rec);
  for (size_t j = 0; j < H; ++j) z[j] = sigmoid(z[j] + rec[j]);

  matvec(wr, x, r, bias_row(br));
  matvec(ur, h_prev, rec);
  for (size_t j = 0; j < H; ++j) r[j] = sigmoid(r[j] + rec[j]);

  for (size_t j = 0; j < H; ++j) rh[j] = r[j] * h_prev[j];
  matvec(wh, x, h_tilde, bias_row(bh));
  matvec(uh, rh, rec);
  for (size_t j = 0; j < H; ++j) h_tilde[j] = std::tanh(h_tilde[j] + rec[j]);

  for (size_t j = 0; j < H; ++j) h_out[j] = (Real(1) - z[j]) * h_prev[j] + z[j] * h_tilde[j];
  check_finite(h_out, "gru h");

  if (cache) {
    cache->x.assign(x.begin(), x.end());
    cache->h_prev.assign(h_prev.begin(), h_prev.end());
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->rh = std::move(rh);
    cache->h_tilde = std::move(h_tilde);
  }
}

void GruCell::backward(const Cache& cache, std::span<const Real> dh, std::span<Real> dx_acc,
                       std::span<Real> dh_prev_acc) {
  const size_t H = hidden_dim;
  require(dh.size() == H && dx_acc.size() == input_dim && dh_prev_acc.size() == H,
          "gru backward: dimension mismatch");

  std::vector<Real> az(H), ah(H), drh(H, Real(0)), ar(H);
  for (size_t j = 0; j < H; ++j) {
    Real z = cache.z[j], ht = cache.h_tilde[j];
    Real dz = dh[j] * (ht - cache.h_prev[j]);
    dh_prev_acc[j] += dh[j] * (Real(1) - z);
    ah[j] = dh[j] * z * (Real(1) - ht * ht);
    az[j] = dz * z * (Real(1) - z);
  }

  outer_acc(gwh, ah, cache.x);
  outer_acc(guh, ah, cache.rh);
  add_inplace(gbh.row(0), ah);
  matvec_t_acc(uh, ah, drh);  // d(r.h_prev)
  for (size_t j = 0; j < H; ++j) {
    Real r = cache.r[j];
    ar[j] = drh[j] * cache.h_prev[j] * r * (Real(1) - r);
    dh_prev_acc[j] += drh[j] * r;
  }

  outer_acc(gwz, az, cache.x);
  outer_acc(guz, az, cache.h_prev);
  add_inplace(gbz.row(0), az);
  outer_acc(gwr, ar, cache.x);
  outer_acc(gur, ar, cache.h_prev);
  add_inplace(gbr.row(0), ar);

  matvec_t_acc(wz, az, dx_acc);
  matvec_t_acc(wr, ar, dx_acc);
  matvec_t_acc(wh, ah, dx_acc);
  matvec_t_acc(uz, az, dh_prev_acc);
  matvec_t_acc(ur, ar, dh_prev_acc);
}

std::vector<ParamRef> GruCell::params(const std::string& p) {
  return {{p + ".wz", &wz, &gwz}, {p + ".uz", &uz, &guz}, {p + ".bz", &bz, &gbz},
          {p + ".wr", &wr, &gwr}, {p + ".ur", &ur, &gur}, {p + ".br", &br, &gbr},
          {p + ".wh", &wh, &gwh}, {p + ".uh", &uh, &guh}, {p + ".bh", &bh, &gbh}};
}

std::pair<std::vector<Real>, std::vector<Real>> lstm_step(const LstmCell& cell,
                                                          std::span<const Real> x,
                                                          std::span<const Real> h_prev,
                                                          std::span<const Real> c_prev) {
  std::vector<Real> h(cell.hidden_dim), c(cell.hidden_dim);
  cell.forward(x, h_prev, c_prev, h, c);
  return {std::move(h), std::move(c)};
}

std::vector<Real> gru_step(const GruCell& cell, std::span<const Real> x,
                           std::span<const Real> h_prev) {
  std::vector<Real> h(cell.hidden_dim);
  cell.forward(x, h_prev, h);
  return h;
}

}  // namespace tqs::nn
