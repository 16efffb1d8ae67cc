#include "rebmkit/ops.hpp"

#include <algorithm>
#include <cmath>

#include "rebmkit/errors.hpp"

namespace rebmkit {

RealMatrix affine(const ParamBlock& w, const ParamBlock& b, const RealMatrix& x) {
  if (w.value.cols != x.rows) {
    throw DimensionError("affine: W is " + w.value.shape() + ", x is " + x.shape());
  }
  if (b.value.rows != w.value.rows || b.value.cols != 1) {
    throw DimensionError("affine: W is " + w.value.shape() + ", b is " + b.value.shape());
  }
  RealMatrix y = matmul(w.value, x);
  for (int i = 0; i < y.rows; ++i) {
    double bi = b.value.at(i, 0);
    for (int j = 0; j < y.cols; ++j) y.at(i, j) += bi;
  }
  return y;
}

RealMatrix affine_backward(ParamBlock& w, ParamBlock& b, const RealMatrix& x,
                           const RealMatrix& dy) {
  if (dy.rows != w.value.rows || dy.cols != x.cols) {
    throw DimensionError("affine_backward: dy is " + dy.shape() + ", W is " + w.value.shape() +
                         ", x is " + x.shape());
  }
  // dW += dy x^T, db += row sums of dy, dx = W^T dy
  for (int i = 0; i < dy.rows; ++i) {
    for (int j = 0; j < dy.cols; ++j) {
      double d = dy.at(i, j);
      if (d == 0.0) continue;
      b.grad.at(i, 0) += d;
      for (int k = 0; k < x.rows; ++k) w.grad.at(i, k) += d * x.at(k, j);
    }
  }
  RealMatrix dx(x.rows, x.cols);
  for (int i = 0; i < dy.rows; ++i) {
    for (int j = 0; j < dy.cols; ++j) {
      double d = dy.at(i, j);
      if (d == 0.0) continue;
      for (int k = 0; k < x.rows; ++k) dx.at(k, j) += w.value.at(i, k) * d;
    }
  }
  return dx;
}

std::vector<double> affine(const ParamBlock& w, const ParamBlock& b, std::span<const double> x) {
  if (w.value.cols != static_cast<int>(x.size())) {
    throw DimensionError("affine: W is " + w.value.shape() + ", x has length " +
                         std::to_string(x.size()));
  }
  std::vector<double> y = matvec(w.value, x);
  for (size_t i = 0; i < y.size(); ++i) y[i] += b.value.data[i];
  return y;
}

std::vector<double> affine_backward(ParamBlock& w, ParamBlock& b, std::span<const double> x,
                                    std::span<const double> dy) {
  add_outer(w.grad, dy, x);
  add_scaled(std::span<double>(b.grad.data), dy, 1.0);
  return matvec_transposed(w.value, dy);
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

RealMatrix elementwise_activation(Activation kind, const RealMatrix& x) {
  RealMatrix y = x;
  activation_inplace(kind, y.data);
  return y;
}

RealMatrix activation_backward(Activation kind, const RealMatrix& y, const RealMatrix& dy) {
  if (!y.same_shape(dy)) {
    throw DimensionError("activation_backward: y is " + y.shape() + ", dy is " + dy.shape());
  }
  RealMatrix dx = dy;
  activation_backward_inplace(kind, y.data, dx.data);
  return dx;
}

void activation_inplace(Activation kind, std::span<double> x) {
  if (kind == Activation::sigmoid) {
    for (double& v : x) v = stable_sigmoid(v);
  } else {
    for (double& v : x) v = std::tanh(v);
  }
}

void activation_backward_inplace(Activation kind, std::span<const double> y,
                                 std::span<double> dy) {
  if (kind == Activation::sigmoid) {
    for (size_t i = 0; i < y.size(); ++i) dy[i] *= y[i] * (1.0 - y[i]);
  } else {
    for (size_t i = 0; i < y.size(); ++i) dy[i] *= 1.0 - y[i] * y[i];
  }
}

double logsumexp(std::span<const double> xs) {
  if (xs.empty()) throw PreconditionError("logsumexp: empty input");
  double m = *std::max_element(xs.begin(), xs.end());
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

void log_softmax_row(std::span<const double> logits, std::span<double> out) {
  double lse = logsumexp(logits);
  for (size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
}

RealMatrix log_softmax(const RealMatrix& logits) {
  if (logits.cols < 1) throw PreconditionError("log_softmax: empty row");
  RealMatrix y(logits.rows, logits.cols);
  for (int r = 0; r < logits.rows; ++r) log_softmax_row(logits.row(r), y.row(r));
  return y;
}

void softmax_row(std::span<const double> logits, std::span<double> out) {
  double m = *std::max_element(logits.begin(), logits.end());
  double acc = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    acc += out[i];
  }
  for (size_t i = 0; i < logits.size(); ++i) out[i] /= acc;
}

double log_sigmoid(double x) {
  // -softplus(-x)
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

}  // namespace rebmkit
