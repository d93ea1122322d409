#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wd/rng.hpp"

namespace wd::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A named trainable array with its gradient and Adam moment buffers.
// Vectors are stored as n-by-1 matrices.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix m;  // Adam first moment
  Matrix v;  // Adam second moment

  Param() = default;
  Param(std::string param_name, int rows, int cols)
      : name(std::move(param_name)),
        value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)),
        m(Matrix::Zero(rows, cols)),
        v(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

// Optimizer state shared by all parameters of one network.
struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
};

// One bias-corrected Adam step on every parameter's accumulated gradient.
// Throws std::runtime_error naming the parameter if a gradient is non-finite.
void adam_update(std::span<Param* const> params, Adam& opt);

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], fan_in = cols.
void init_uniform_fan_in(Param& w, Rng& rng);

// y = W x + b
struct DenseLayer {
  Param W;
  Param b;

  DenseLayer() = default;
  DenseLayer(const std::string& name, int out, int in, Rng& rng);

  int in_size() const { return static_cast<int>(W.value.cols()); }
  int out_size() const { return static_cast<int>(W.value.rows()); }

  Vector forward(const Vector& x) const;
  Matrix forward(const Matrix& X) const;  // columns are batch items
  std::vector<Param*> params() { return {&W, &b}; }
};

// Gated recurrent cell:
//   u  = sigmoid(Wu x + Uu h + bu)
//   r  = sigmoid(Wr x + Ur h + br)
//   c  = tanh(Wc x + Uc (r * h) + bc)
//   h' = (1 - u) * h + u * c
struct GruCell {
  Param Wu, Uu, bu;
  Param Wr, Ur, br;
  Param Wc, Uc, bc;

  GruCell() = default;
  GruCell(const std::string& name, int hidden, int input, Rng& rng);

  int hidden_size() const { return static_cast<int>(Uu.value.rows()); }
  int input_size() const { return static_cast<int>(Wu.value.cols()); }

  Vector step(const Vector& h, const Vector& x) const;
  Matrix step(const Matrix& H, const Matrix& X) const;
  std::vector<Param*> params() {
    return {&Wu, &Uu, &bu, &Wr, &Ur, &br, &Wc, &Uc, &bc};
  }
};

// Reverse-mode gradient tape over matrix-valued nodes. Columns of a node
// value are independent batch items; a scalar is a 1x1 node. Building the
// graph runs the forward pass eagerly; backward() replays it in reverse
// and accumulates into Param::grad.
class Tape {
 public:
  int input(Matrix value);
  int matmul(Param& w, int x);     // W * x
  int bias_add(Param& b, int x);   // x + b broadcast over columns
  int dense(DenseLayer& layer, int x) { return bias_add(layer.b, matmul(layer.W, x)); }
  int tanh_op(int x);
  int sigmoid_op(int x);
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);                       // elementwise
  int affine(int x, double scale, double shift);  // scale * x + shift
  int concat_rows(int a, int b);
  int stop_gradient(int x);
  int sum_sq(int x);  // 1x1: sum of squared entries
  int gru(GruCell& cell, int h, int x);
  int mse(int a, int b);  // mean squared difference, 1x1

  const Matrix& value(int id) const { return nodes_[id].value; }
  double scalar(int id) const { return nodes_[id].value(0, 0); }
  std::size_t size() const { return nodes_.size(); }

  // loss must be 1x1; seeds its gradient with 1 and accumulates parameter
  // gradients. Node gradients are discarded afterwards.
  void backward(int loss);

 private:
  enum class Op {
    kInput,
    kMatMul,
    kBiasAdd,
    kTanh,
    kSigmoid,
    kAdd,
    kSub,
    kMul,
    kAffine,
    kConcatRows,
    kStopGrad,
    kSumSq,
  };
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    Param* param = nullptr;
    double c0 = 0.0;
    double c1 = 0.0;
    Matrix value;
  };
  int push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }
  std::vector<Node> nodes_;
};

// Fully connected stack with tanh hidden activations and identity output.
struct Mlp {
  std::vector<DenseLayer> layers;

  Mlp() = default;
  Mlp(const std::string& name, const std::vector<int>& sizes, Rng& rng);

  Vector forward(const Vector& x) const;
  Matrix forward(const Matrix& X) const;
  int build(Tape& tape, int x);  // tape node of the output
  std::vector<Param*> params();
};

// Central-difference check of the analytic gradients of `loss_fn` with
// respect to every entry of every parameter in `params`.
//
// loss_fn(true) must zero grads, run forward + backward and return the
// loss; loss_fn(false) must return the loss value only. Returns
// max |analytic - numeric| / max(1, |analytic|).
double finite_diff_check(const std::function<double(bool)>& loss_fn,
                         std::span<Param* const> params, double eps);

}  // namespace wd::nn
