#include <doctest.h>

#include <cmath>
#include <span>

#include "wd/nn.hpp"
#include "wd/rng.hpp"

using wd::Rng;
using wd::nn::Adam;
using wd::nn::DenseLayer;
using wd::nn::GruCell;
using wd::nn::Matrix;
using wd::nn::Mlp;
using wd::nn::Param;
using wd::nn::Tape;
using wd::nn::Vector;

namespace {

std::span<Param* const> span_of(const std::vector<Param*>& v) {
  return {v.data(), v.size()};
}

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = rng.uniform(-1.0, 1.0);
  }
  return m;
}

void zero_params(std::vector<Param*> params) {
  for (auto* p : params) p->value.setZero();
}

}  // namespace

TEST_CASE("dense forward: identity, zero weights, hand-computed") {
  Rng rng(1);
  DenseLayer l("l", 2, 2, rng);

  l.W.value = Matrix::Identity(2, 2);
  l.b.value.setZero();
  Vector x(2);
  x << 3, -1;
  CHECK(l.forward(x) == x);

  l.W.value.setZero();
  l.b.value << 5, 5;
  const Vector y = l.forward(x);
  CHECK(y(0) == 5.0);
  CHECK(y(1) == 5.0);

  l.W.value << 1, 2, 3, 4;
  l.b.value << 0, 1;
  Vector x2(2);
  x2 << 1, 1;
  const Vector y2 = l.forward(x2);
  CHECK(y2(0) == doctest::Approx(3));
  CHECK(y2(1) == doctest::Approx(8));
}

TEST_CASE("dense forward rejects dimension mismatch") {
  Rng rng(1);
  DenseLayer l("l", 2, 3, rng);
  CHECK_THROWS(l.forward(Vector(Vector::Zero(2))));
}

TEST_CASE("dense linearity with zero bias") {
  Rng rng(7);
  DenseLayer l("l", 5, 4, rng);
  l.b.value.setZero();
  const Vector x = random_matrix(4, 1, rng);
  const Vector y = random_matrix(4, 1, rng);
  const double alpha = 1.7, beta = -0.3;
  const Vector lhs = l.forward(Vector(alpha * x + beta * y));
  const Vector rhs = alpha * l.forward(x) + beta * l.forward(y);
  CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, rhs.norm()));
}

TEST_CASE("gru step: zero parameters halve the hidden state") {
  Rng rng(2);
  GruCell cell("g", 2, 3, rng);
  zero_params(cell.params());
  Vector h(2);
  h << 1, 1;
  const Vector hn = cell.step(h, Vector(Vector::Zero(3)));
  CHECK(hn(0) == doctest::Approx(0.5));
  CHECK(hn(1) == doctest::Approx(0.5));
  CHECK(cell.step(Vector(Vector::Zero(2)), Vector(Vector::Ones(3))).norm() == 0.0);
}

TEST_CASE("gru step stays inside the unit box") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    GruCell cell("g", 4, 3, rng);
    // random parameter scales well beyond init range
    for (auto* p : cell.params()) p->value = 3.0 * random_matrix(
        static_cast<int>(p->value.rows()), static_cast<int>(p->value.cols()), rng);
    const Vector h = random_matrix(4, 1, rng);  // |h|_inf <= 1
    const Vector x = 5.0 * random_matrix(3, 1, rng);
    CHECK(cell.step(h, x).lpNorm<Eigen::Infinity>() <= 1.0);
  }
}

TEST_CASE("backward: d(sum(Wx))/dW = x^T outer") {
  Rng rng(4);
  Param w("w", 3, 4);
  wd::nn::init_uniform_fan_in(w, rng);
  Param ones("ones", 1, 3);
  ones.value.setOnes();
  const Matrix x = random_matrix(4, 1, rng);

  Tape tape;
  const int y = tape.matmul(w, tape.input(x));
  const int loss = tape.matmul(ones, y);
  w.zero_grad();
  ones.zero_grad();
  tape.backward(loss);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) CHECK(w.grad(i, j) == doctest::Approx(x(j, 0)));
  }
}

TEST_CASE("backward: unused parameter has exactly zero gradient") {
  Rng rng(5);
  Param w("w", 2, 2), unused("unused", 2, 2);
  wd::nn::init_uniform_fan_in(w, rng);
  wd::nn::init_uniform_fan_in(unused, rng);
  Tape tape;
  const int loss = tape.sum_sq(tape.matmul(w, tape.input(random_matrix(2, 1, rng))));
  w.zero_grad();
  unused.zero_grad();
  tape.backward(loss);
  CHECK(unused.grad.norm() == 0.0);
}

TEST_CASE("backward rejects non-scalar loss") {
  Tape tape;
  const int x = tape.input(Matrix::Ones(2, 2));
  CHECK_THROWS(tape.backward(x));
}

TEST_CASE("two-layer tanh net matches central differences") {
  Rng rng(6);
  Mlp net("m", {4, 6, 3}, rng);
  const Matrix X = random_matrix(4, 2, rng);
  const Matrix T = random_matrix(3, 2, rng);
  auto params = net.params();
  auto loss_fn = [&](bool with_grad) {
    Tape tape;
    const int loss = tape.mse(net.build(tape, tape.input(X)), tape.input(T));
    if (with_grad) {
      for (auto* p : params) p->zero_grad();
      tape.backward(loss);
    }
    return tape.scalar(loss);
  };
  CHECK(wd::nn::finite_diff_check(loss_fn, span_of(params), 1e-5) < 1e-4);
}

TEST_CASE("linear layer gradient check is exact to rounding") {
  Rng rng(8);
  DenseLayer l("l", 3, 4, rng);
  const Matrix X = random_matrix(4, 2, rng);
  const Matrix T = random_matrix(3, 2, rng);
  auto params = l.params();
  auto loss_fn = [&](bool with_grad) {
    Tape tape;
    const int loss = tape.mse(tape.dense(l, tape.input(X)), tape.input(T));
    if (with_grad) {
      for (auto* p : params) p->zero_grad();
      tape.backward(loss);
    }
    return tape.scalar(loss);
  };
  CHECK(wd::nn::finite_diff_check(loss_fn, span_of(params), 1e-5) < 1e-8);
}

TEST_CASE("gru unrolled three steps matches central differences") {
  Rng rng(9);
  GruCell cell("g", 3, 2, rng);
  const Matrix X0 = random_matrix(2, 2, rng);
  const Matrix X1 = random_matrix(2, 2, rng);
  const Matrix X2 = random_matrix(2, 2, rng);
  auto params = cell.params();
  auto loss_fn = [&](bool with_grad) {
    Tape tape;
    int h = tape.input(Matrix::Zero(3, 2));
    h = tape.gru(cell, h, tape.input(X0));
    h = tape.gru(cell, h, tape.input(X1));
    h = tape.gru(cell, h, tape.input(X2));
    const int loss = tape.sum_sq(h);
    if (with_grad) {
      for (auto* p : params) p->zero_grad();
      tape.backward(loss);
    }
    return tape.scalar(loss);
  };
  CHECK(wd::nn::finite_diff_check(loss_fn, span_of(params), 1e-5) < 1e-4);
}

TEST_CASE("adam: single hand-computed step") {
  Param p("p", 1, 1);
  p.value(0, 0) = 1.0;
  p.grad(0, 0) = 2.0;
  Adam opt;
  opt.lr = 1e-3;
  std::vector<Param*> params{&p};
  wd::nn::adam_update(span_of(params), opt);
  // m_hat = 2, v_hat = 4 -> theta' = 1 - 1e-3 * 2 / (2 + 1e-8)
  CHECK(p.value(0, 0) == doctest::Approx(0.999).epsilon(1e-6));
  CHECK(opt.step == 1);
}

TEST_CASE("adam: zero gradient at t=1 leaves parameters unchanged") {
  Param p("p", 2, 2);
  p.value.setConstant(1.5);
  p.grad.setZero();
  Adam opt;
  std::vector<Param*> params{&p};
  wd::nn::adam_update(span_of(params), opt);
  CHECK(p.value == Matrix::Constant(2, 2, 1.5));
}

TEST_CASE("adam: equal gradients produce equal updates") {
  Param a("a", 1, 1), b("b", 1, 1);
  a.value(0, 0) = 0.3;
  b.value(0, 0) = 0.9;
  a.grad(0, 0) = -1.25;
  b.grad(0, 0) = -1.25;
  Adam opt;
  std::vector<Param*> params{&a, &b};
  wd::nn::adam_update(span_of(params), opt);
  // the two deltas agree up to the rounding of the different base values
  CHECK(a.value(0, 0) - 0.3 == doctest::Approx(b.value(0, 0) - 0.9).epsilon(1e-12));
}

TEST_CASE("adam: identical inputs give bitwise identical outputs") {
  auto run = [] {
    Param p("p", 2, 1);
    p.value << 0.5, -0.25;
    p.grad << 1.0, -2.0;
    Adam opt;
    std::vector<Param*> params{&p};
    wd::nn::adam_update({params.data(), params.size()}, opt);
    return Matrix(p.value);
  };
  CHECK(run() == run());
}

TEST_CASE("adam rejects non-finite gradients, naming the parameter") {
  Param p("theta_bad", 1, 1);
  p.grad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  Adam opt;
  std::vector<Param*> params{&p};
  CHECK_THROWS_WITH_AS(wd::nn::adam_update(span_of(params), opt),
                       doctest::Contains("theta_bad"), std::runtime_error);
}
