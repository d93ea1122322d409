#include "wd/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace wd::nn {

void adam_update(std::span<Param* const> params, Adam& opt) {
  for (const Param* p : params) {
    if (!p->grad.allFinite()) {
      throw std::runtime_error("adam_update: non-finite gradient for parameter '" + p->name + "'");
    }
  }
  opt.step += 1;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (Param* p : params) {
    p->m = opt.beta1 * p->m + (1.0 - opt.beta1) * p->grad;
    p->v = opt.beta2 * p->v + (1.0 - opt.beta2) * p->grad.cwiseProduct(p->grad);
    const Matrix m_hat = p->m / bc1;
    const Matrix v_hat = p->v / bc2;
    p->value.array() -= opt.lr * m_hat.array() / (v_hat.array().sqrt() + opt.eps);
  }
}

void init_uniform_fan_in(Param& w, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(w.value.cols()));
  for (Eigen::Index j = 0; j < w.value.cols(); ++j) {
    for (Eigen::Index i = 0; i < w.value.rows(); ++i) {
      w.value(i, j) = rng.uniform(-bound, bound);
    }
  }
}

DenseLayer::DenseLayer(const std::string& name, int out, int in, Rng& rng)
    : W(name + ".W", out, in), b(name + ".b", out, 1) {
  init_uniform_fan_in(W, rng);
}

Vector DenseLayer::forward(const Vector& x) const {
  if (x.size() != W.value.cols()) {
    throw std::invalid_argument("DenseLayer '" + W.name + "': input size " +
                                std::to_string(x.size()) + " != " + std::to_string(W.value.cols()));
  }
  return W.value * x + b.value.col(0);
}

Matrix DenseLayer::forward(const Matrix& X) const {
  if (X.rows() != W.value.cols()) {
    throw std::invalid_argument("DenseLayer '" + W.name + "': input rows mismatch");
  }
  return (W.value * X).colwise() + b.value.col(0);
}

namespace {
Matrix sigmoid(const Matrix& x) { return ((-x.array()).exp() + 1.0).inverse().matrix(); }
}  // namespace

GruCell::GruCell(const std::string& name, int hidden, int input, Rng& rng)
    : Wu(name + ".Wu", hidden, input), Uu(name + ".Uu", hidden, hidden), bu(name + ".bu", hidden, 1),
      Wr(name + ".Wr", hidden, input), Ur(name + ".Ur", hidden, hidden), br(name + ".br", hidden, 1),
      Wc(name + ".Wc", hidden, input), Uc(name + ".Uc", hidden, hidden), bc(name + ".bc", hidden, 1) {
  init_uniform_fan_in(Wu, rng);
  init_uniform_fan_in(Uu, rng);
  init_uniform_fan_in(Wr, rng);
  init_uniform_fan_in(Ur, rng);
  init_uniform_fan_in(Wc, rng);
  init_uniform_fan_in(Uc, rng);
}

Matrix GruCell::step(const Matrix& H, const Matrix& X) const {
  if (H.rows() != hidden_size() || X.rows() != input_size() || H.cols() != X.cols()) {
    throw std::invalid_argument("GruCell '" + Wu.name + "': dimension mismatch");
  }
  const Matrix u = sigmoid(((Wu.value * X + Uu.value * H).colwise() + bu.value.col(0)));
  const Matrix r = sigmoid(((Wr.value * X + Ur.value * H).colwise() + br.value.col(0)));
  const Matrix c =
      ((Wc.value * X + Uc.value * r.cwiseProduct(H)).colwise() + bc.value.col(0)).array().tanh().matrix();
  return (1.0 - u.array()).matrix().cwiseProduct(H) + u.cwiseProduct(c);
}

Vector GruCell::step(const Vector& h, const Vector& x) const {
  return step(Matrix(h), Matrix(x)).col(0);
}

int Tape::input(Matrix value) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(value);
  return push(std::move(n));
}

int Tape::matmul(Param& w, int x) {
  if (nodes_[x].value.rows() != w.value.cols()) {
    throw std::invalid_argument("Tape::matmul '" + w.name + "': dimension mismatch");
  }
  Node n;
  n.op = Op::kMatMul;
  n.a = x;
  n.param = &w;
  n.value = w.value * nodes_[x].value;
  return push(std::move(n));
}

int Tape::bias_add(Param& b, int x) {
  if (nodes_[x].value.rows() != b.value.rows()) {
    throw std::invalid_argument("Tape::bias_add '" + b.name + "': dimension mismatch");
  }
  Node n;
  n.op = Op::kBiasAdd;
  n.a = x;
  n.param = &b;
  n.value = nodes_[x].value.colwise() + b.value.col(0);
  return push(std::move(n));
}

int Tape::tanh_op(int x) {
  Node n;
  n.op = Op::kTanh;
  n.a = x;
  n.value = nodes_[x].value.array().tanh().matrix();
  return push(std::move(n));
}

int Tape::sigmoid_op(int x) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = x;
  n.value = sigmoid(nodes_[x].value);
  return push(std::move(n));
}

int Tape::add(int a, int b) {
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.value = nodes_[a].value + nodes_[b].value;
  return push(std::move(n));
}

int Tape::sub(int a, int b) {
  Node n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  n.value = nodes_[a].value - nodes_[b].value;
  return push(std::move(n));
}

int Tape::mul(int a, int b) {
  Node n;
  n.op = Op::kMul;
  n.a = a;
  n.b = b;
  n.value = nodes_[a].value.cwiseProduct(nodes_[b].value);
  return push(std::move(n));
}

int Tape::affine(int x, double scale, double shift) {
  Node n;
  n.op = Op::kAffine;
  n.a = x;
  n.c0 = scale;
  n.c1 = shift;
  n.value = (scale * nodes_[x].value.array() + shift).matrix();
  return push(std::move(n));
}

int Tape::concat_rows(int a, int b) {
  if (nodes_[a].value.cols() != nodes_[b].value.cols()) {
    throw std::invalid_argument("Tape::concat_rows: column mismatch");
  }
  Node n;
  n.op = Op::kConcatRows;
  n.a = a;
  n.b = b;
  Matrix v(nodes_[a].value.rows() + nodes_[b].value.rows(), nodes_[a].value.cols());
  v << nodes_[a].value, nodes_[b].value;
  n.value = std::move(v);
  return push(std::move(n));
}

int Tape::stop_gradient(int x) {
  Node n;
  n.op = Op::kStopGrad;
  n.a = x;
  n.value = nodes_[x].value;
  return push(std::move(n));
}

int Tape::sum_sq(int x) {
  Node n;
  n.op = Op::kSumSq;
  n.a = x;
  n.value = Matrix::Constant(1, 1, nodes_[x].value.squaredNorm());
  return push(std::move(n));
}

int Tape::gru(GruCell& cell, int h, int x) {
  const int u = sigmoid_op(bias_add(cell.bu, add(matmul(cell.Wu, x), matmul(cell.Uu, h))));
  const int r = sigmoid_op(bias_add(cell.br, add(matmul(cell.Wr, x), matmul(cell.Ur, h))));
  const int c = tanh_op(bias_add(cell.bc, add(matmul(cell.Wc, x), matmul(cell.Uc, mul(r, h)))));
  return add(mul(affine(u, -1.0, 1.0), h), mul(u, c));
}

int Tape::mse(int a, int b) {
  const int d = sub(a, b);
  const double n = static_cast<double>(nodes_[d].value.size());
  return affine(sum_sq(d), 1.0 / n, 0.0);
}

void Tape::backward(int loss) {
  if (nodes_[loss].value.rows() != 1 || nodes_[loss].value.cols() != 1) {
    throw std::invalid_argument("Tape::backward: loss is not scalar");
  }
  std::vector<Matrix> grads(nodes_.size());
  std::vector<bool> live(nodes_.size(), false);
  grads[loss] = Matrix::Constant(1, 1, 1.0);
  live[loss] = true;

  auto accum = [&](int id, const Matrix& g) {
    if (!live[id]) {
      grads[id] = g;
      live[id] = true;
    } else {
      grads[id] += g;
    }
  };

  for (int i = loss; i >= 0; --i) {
    if (!live[i]) continue;
    const Node& n = nodes_[i];
    const Matrix& g = grads[i];
    switch (n.op) {
      case Op::kInput:
        break;
      case Op::kMatMul:
        n.param->grad.noalias() += g * nodes_[n.a].value.transpose();
        accum(n.a, n.param->value.transpose() * g);
        break;
      case Op::kBiasAdd:
        n.param->grad.col(0).noalias() += g.rowwise().sum();
        accum(n.a, g);
        break;
      case Op::kTanh:
        accum(n.a, g.cwiseProduct((1.0 - n.value.array().square()).matrix()));
        break;
      case Op::kSigmoid:
        accum(n.a, g.cwiseProduct(n.value.cwiseProduct((1.0 - n.value.array()).matrix())));
        break;
      case Op::kAdd:
        accum(n.a, g);
        accum(n.b, g);
        break;
      case Op::kSub:
        accum(n.a, g);
        accum(n.b, -g);
        break;
      case Op::kMul:
        accum(n.a, g.cwiseProduct(nodes_[n.b].value));
        accum(n.b, g.cwiseProduct(nodes_[n.a].value));
        break;
      case Op::kAffine:
        accum(n.a, n.c0 * g);
        break;
      case Op::kConcatRows: {
        const Eigen::Index ra = nodes_[n.a].value.rows();
        accum(n.a, g.topRows(ra));
        accum(n.b, g.bottomRows(g.rows() - ra));
        break;
      }
      case Op::kStopGrad:
        break;
      case Op::kSumSq:
        accum(n.a, 2.0 * g(0, 0) * nodes_[n.a].value);
        break;
    }
  }
}

Mlp::Mlp(const std::string& name, const std::vector<int>& sizes, Rng& rng) {
  if (sizes.size() < 2) throw std::invalid_argument("Mlp: need at least input and output sizes");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    layers.emplace_back(name + ".l" + std::to_string(i), sizes[i + 1], sizes[i], rng);
  }
}

Vector Mlp::forward(const Vector& x) const {
  Vector h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].forward(h);
    if (i + 1 < layers.size()) h = h.array().tanh().matrix();
  }
  return h;
}

Matrix Mlp::forward(const Matrix& X) const {
  Matrix h = X;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].forward(h);
    if (i + 1 < layers.size()) h = h.array().tanh().matrix();
  }
  return h;
}

int Mlp::build(Tape& tape, int x) {
  int h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = tape.dense(layers[i], h);
    if (i + 1 < layers.size()) h = tape.tanh_op(h);
  }
  return h;
}

std::vector<Param*> Mlp::params() {
  std::vector<Param*> out;
  for (auto& l : layers) {
    out.push_back(&l.W);
    out.push_back(&l.b);
  }
  return out;
}

double finite_diff_check(const std::function<double(bool)>& loss_fn,
                         std::span<Param* const> params, double eps) {
  loss_fn(true);
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (const Param* p : params) analytic.push_back(p->grad);

  double max_rel = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param* p = params[k];
    for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
      for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
        const double saved = p->value(i, j);
        p->value(i, j) = saved + eps;
        const double lp = loss_fn(false);
        p->value(i, j) = saved - eps;
        const double lm = loss_fn(false);
        p->value(i, j) = saved;
        const double numeric = (lp - lm) / (2.0 * eps);
        const double a = analytic[k](i, j);
        const double rel = std::abs(a - numeric) / std::max(1.0, std::abs(a));
        max_rel = std::max(max_rel, rel);
      }
    }
  }
  return max_rel;
}

}  // namespace wd::nn
