// ops.hpp -- forward ops with matching analytic backward passes.
//
// Backward functions accumulate into the blocks' grad fields and return the
// gradient with respect to the input, so sequence models can chain them.
#pragma once

#include <span>
#include <vector>

#include "rebmkit/matrix.hpp"
#include "rebmkit/param.hpp"

namespace rebmkit {

// y = W x + b, x may carry several columns (one sample per column).
RealMatrix affine(const ParamBlock& w, const ParamBlock& b, const RealMatrix& x);
RealMatrix affine_backward(ParamBlock& w, ParamBlock& b, const RealMatrix& x,
                           const RealMatrix& dy);

std::vector<double> affine(const ParamBlock& w, const ParamBlock& b, std::span<const double> x);
std::vector<double> affine_backward(ParamBlock& w, ParamBlock& b, std::span<const double> x,
                                    std::span<const double> dy);

enum class Activation { sigmoid, tanh };

// Branch-by-sign sigmoid: never forms exp of a large positive argument.
double stable_sigmoid(double x);

RealMatrix elementwise_activation(Activation kind, const RealMatrix& x);
// dx from the activated output y (derivative expressed through y).
RealMatrix activation_backward(Activation kind, const RealMatrix& y, const RealMatrix& dy);

void activation_inplace(Activation kind, std::span<double> x);
// dy is scaled in place into dx using the activated output y.
void activation_backward_inplace(Activation kind, std::span<const double> y, std::span<double> dy);

// log(sum(exp(xs))) via max shift; PreconditionError on empty input.
double logsumexp(std::span<const double> xs);

// out = logits - logsumexp(logits)
void log_softmax_row(std::span<const double> logits, std::span<double> out);
// Applied row-wise.
RealMatrix log_softmax(const RealMatrix& logits);

void softmax_row(std::span<const double> logits, std::span<double> out);

// log(sigmoid(x)) without overflow at either tail.
double log_sigmoid(double x);

}  // namespace rebmkit
