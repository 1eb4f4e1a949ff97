#include <doctest.h>

#include <cmath>

#include "tqs/nn/adam.hpp"
#include "tqs/nn/gradcheck.hpp"
#include "tqs/nn/kernels.hpp"
#include "tqs/nn/ops.hpp"
#include "tqs/rng.hpp"

using namespace tqs;
using namespace tqs::nn;

TEST_SUITE("nn_core") {

TEST_CASE("matrix construction validates") {
  Matrix m(2, 3);
  CHECK(m.size() == 6);
  CHECK(m(1, 2) == 0.0);
  CHECK_THROWS_AS(Matrix::from_data(2, 2, {1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(Matrix::from_data(1, 2, {1.0, std::nan("")}), DivergenceError);
  CHECK_THROWS_AS(Matrix::from_data(1, 1, {INFINITY}), DivergenceError);
}

TEST_CASE("serial and parallel kernels are bit-identical") {
  Rng rng(99);
  for (size_t n : {size_t(3), size_t(17), size_t(64), size_t(200)}) {
    Matrix a = Matrix::uniform(n, n + 1, -2, 2, rng);
    std::vector<Real> x(n + 1), y1(n), y2(n);
    for (auto& v : x) v = rng.uniform(-1, 1);

    matvec_serial(a, x, y1);
    matvec_parallel(a, x, y2);
    CHECK(y1 == y2);

    std::vector<Real> t1(n + 1, 0.25), t2(n + 1, 0.25), xin(n);
    for (auto& v : xin) v = rng.uniform(-1, 1);
    matvec_t_acc_serial(a, xin, t1);
    matvec_t_acc_parallel(a, xin, t2);
    CHECK(t1 == t2);

    Matrix g1(n, n + 1), g2(n, n + 1);
    outer_acc_serial(g1, xin, x);
    outer_acc_parallel(g2, xin, x);
    CHECK(std::vector<Real>(g1.data().begin(), g1.data().end()) ==
          std::vector<Real>(g2.data().begin(), g2.data().end()));

    Matrix b = Matrix::uniform(n + 1, n, -1, 1, rng);
    Matrix c1(n, n), c2(n, n);
    matmul_serial(a, b, c1);
    matmul_parallel(a, b, c2);
    CHECK(std::vector<Real>(c1.data().begin(), c1.data().end()) ==
          std::vector<Real>(c2.data().begin(), c2.data().end()));

    Matrix d = Matrix::uniform(n, n + 1, -1, 1, rng);
    Matrix e1(n, n), e2(n, n);
    matmul_nt_serial(a, d, e1);
    matmul_nt_parallel(a, d, e2);
    CHECK(std::vector<Real>(e1.data().begin(), e1.data().end()) ==
          std::vector<Real>(e2.data().begin(), e2.data().end()));

    Matrix a2 = Matrix::uniform(n, n + 1, -1, 1, rng);
    Matrix f1(n + 1, n + 1), f2(n + 1, n + 1);
    matmul_tn_acc_serial(a, a2, f1);
    matmul_tn_acc_parallel(a, a2, f2);
    CHECK(std::vector<Real>(f1.data().begin(), f1.data().end()) ==
          std::vector<Real>(f2.data().begin(), f2.data().end()));
  }
}

TEST_CASE("matmul agrees with a naive triple loop") {
  Rng rng(5);
  Matrix a = Matrix::uniform(7, 11, -1, 1, rng);
  Matrix b = Matrix::uniform(11, 5, -1, 1, rng);
  Matrix c(7, 5);
  matmul(a, b, c);
  for (size_t i = 0; i < 7; ++i)
    for (size_t j = 0; j < 5; ++j) {
      Real s = 0;
      for (size_t k = 0; k < 11; ++k) s += a(i, k) * b(k, j);
      CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("kernel shape checks") {
  Matrix a(3, 4);
  std::vector<Real> x(5), y(3);
  CHECK_THROWS_AS(matvec(a, x, y), ShapeError);
}

TEST_CASE("softmax basics") {
  auto u = softmax(std::vector<Real>{0, 0});
  CHECK(u[0] == doctest::Approx(0.5));
  CHECK(u[1] == doctest::Approx(0.5));

  auto big = softmax(std::vector<Real>{1000, 1000, 1000});
  for (Real p : big) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));

  auto v = softmax(std::vector<Real>{std::log(1.0), std::log(2.0), std::log(3.0)});
  CHECK(v[0] == doctest::Approx(1.0 / 6).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(2.0 / 6).epsilon(1e-12));
  CHECK(v[2] == doctest::Approx(3.0 / 6).epsilon(1e-12));

  std::vector<Real> empty;
  CHECK_THROWS_AS(softmax(empty), ShapeError);
}

TEST_CASE("softmax invariances") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Real> logits(6);
    for (auto& l : logits) l = rng.uniform(-4, 4);
    auto p = softmax(logits);
    Real sum = 0;
    for (Real v : p) {
      CHECK(v > 0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);

    auto shifted = logits;
    for (auto& l : shifted) l += 3.7;
    auto p2 = softmax(shifted);
    for (size_t i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(p2[i]).epsilon(1e-12));

    std::swap(logits[1], logits[4]);
    auto p3 = softmax(logits);
    CHECK(p3[1] == doctest::Approx(p[4]).epsilon(1e-12));
    CHECK(p3[4] == doctest::Approx(p[1]).epsilon(1e-12));
  }
}

TEST_CASE("cross_entropy") {
  std::vector<Real> uniform4(4, 0.25);
  CHECK(cross_entropy(uniform4, 2) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  std::vector<Real> onehot{0, 1, 0};
  CHECK(cross_entropy(onehot, 1) == 0.0);

  std::vector<Real> zero{1, 0};
  CHECK(cross_entropy(zero, 1) == doctest::Approx(std::log(1e12)).epsilon(1e-9));

  CHECK_THROWS_AS(cross_entropy(onehot, 5), ShapeError);
}

TEST_CASE("adam first step moves by about lr in the gradient direction") {
  Matrix theta(1, 1), grad(1, 1);
  theta(0, 0) = 0.0;
  grad(0, 0) = 3.0;
  std::vector<ParamRef> refs{{"x", &theta, &grad}};
  AdamState adam({0.01});
  adam.step(refs);
  // m_hat = g, v_hat = g^2: update = -lr * g / (|g| + eps), about -lr.
  CHECK(theta(0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(adam.t() == 1);
}

TEST_CASE("adam with zero gradients is the identity") {
  Rng rng(2);
  Matrix theta = Matrix::uniform(3, 3, -1, 1, rng);
  Matrix grad(3, 3);
  auto before = std::vector<Real>(theta.data().begin(), theta.data().end());
  std::vector<ParamRef> refs{{"x", &theta, &grad}};
  AdamState adam({0.5});
  for (int i = 0; i < 10; ++i) adam.step(refs);
  CHECK(std::vector<Real>(theta.data().begin(), theta.data().end()) == before);
}

TEST_CASE("adam minimizes x^2") {
  Matrix x(1, 1), g(1, 1);
  x(0, 0) = 1.0;
  std::vector<ParamRef> refs{{"x", &x, &g}};
  AdamState adam({0.1});
  for (int i = 0; i < 100; ++i) {
    g(0, 0) = 2 * x(0, 0);
    adam.step(refs);
  }
  CHECK(std::abs(x(0, 0)) < 0.1);
}

TEST_CASE("dropout_mask") {
  Rng rng(8);
  auto ones = dropout_mask(16, 0.0, rng);
  for (Real m : ones) CHECK(m == 1.0);

  auto mask = dropout_mask(100000, 0.5, rng);
  size_t zeros = 0;
  for (Real m : mask) {
    CHECK((m == 0.0 || m == 2.0));  // inverted dropout: kept entries scale by 2
    if (m == 0.0) ++zeros;
  }
  Real frac = Real(zeros) / Real(mask.size());
  CHECK(frac > 0.49);
  CHECK(frac < 0.51);

  CHECK_THROWS_AS(dropout_mask(4, 1.0, rng), ConfigError);
  CHECK_THROWS_AS(dropout_mask(4, -0.1, rng), ConfigError);
}

// Linear-softmax toy model: loss = CE(softmax(W x + b), target).
struct ToyModel {
  Matrix w, b, gw, gb;
  std::vector<Real> x;
  size_t target;

  ToyModel(size_t out, size_t in, Rng& rng)
      : w(Matrix::uniform(out, in, -1, 1, rng)),
        b(Matrix::uniform(1, out, -1, 1, rng)),
        gw(out, in),
        gb(1, out),
        x(in),
        target(1) {
    for (auto& v : x) v = rng.uniform(-1, 1);
  }

  std::vector<ParamRef> params() { return {{"w", &w, &gw}, {"b", &b, &gb}}; }

  Real loss() const {
    std::vector<Real> logits(w.rows());
    matvec(w, x, logits, b.row(0));
    softmax_inplace(logits);
    return cross_entropy(logits, target);
  }

  void grads() {
    zero_grads(params());
    std::vector<Real> logits(w.rows());
    matvec(w, x, logits, b.row(0));
    softmax_inplace(logits);
    std::vector<Real> dlogits(w.rows(), 0);
    softmax_ce_backward(logits, target, 1.0, dlogits);
    outer_acc(gw, dlogits, x);
    add_inplace(gb.row(0), dlogits);
  }
};

TEST_CASE("grad_check passes on a linear-softmax model") {
  Rng rng(41);
  ToyModel model(5, 7, rng);
  auto refs = model.params();
  auto report = grad_check([&] { return model.loss(); }, [&] { model.grads(); }, refs, rng);
  CHECK(report.checked == 5 * 7 + 5);
  CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("grad_check detects a corrupted gradient") {
  Rng rng(43);
  ToyModel model(4, 4, rng);
  auto refs = model.params();
  auto report = grad_check([&] { return model.loss(); },
                           [&] {
                             model.grads();
                             model.gw(2, 2) += 0.5;  // deliberate corruption
                           },
                           refs, rng);
  CHECK(report.max_rel_err > 1e-4);
  CHECK(report.worst_coord == "w[10]");
}

TEST_CASE("grad_check rejects a non-deterministic forward") {
  Rng rng(47);
  ToyModel model(3, 3, rng);
  auto refs = model.params();
  int calls = 0;
  CHECK_THROWS_AS(grad_check([&] { return model.loss() + 0.001 * (calls++); },
                             [&] { model.grads(); }, refs, rng),
                  ConfigError);
}

TEST_CASE("clip_grads caps the global norm") {
  Matrix p(1, 4), g(1, 4);
  for (size_t j = 0; j < 4; ++j) g(0, j) = 3.0;
  std::vector<ParamRef> refs{{"p", &p, &g}};
  CHECK(grad_norm(refs) == doctest::Approx(6.0));
  clip_grads(refs, 5.0);
  CHECK(grad_norm(refs) == doctest::Approx(5.0));
  clip_grads(refs, 10.0);  // already under the cap
  CHECK(grad_norm(refs) == doctest::Approx(5.0));
}

TEST_CASE("rng reproducibility and state restore") {
  Rng a(123), b(123);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());

  std::string state = a.state();
  std::vector<uint64_t> expected;
  for (int i = 0; i < 5; ++i) expected.push_back(a.next_u64());
  Rng c(0);
  c.set_state(state);
  for (int i = 0; i < 5; ++i) CHECK(c.next_u64() == expected[size_t(i)]);

  Rng parent(9);
  Rng child1 = parent.split(1);
  Rng child2 = parent.split(1);  // parent advanced, so a different stream
  CHECK(child1.next_u64() != child2.next_u64());
}

}  // TEST_SUITE
