#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "rankae/tensor.hpp"

namespace rankae {

/// Fully connected layer, weight is (out x in) row-major. Parameters only;
/// gradients live in a mirror LinearGrads so minibatch workers can each
/// accumulate into their own buffer.
template <class S>
struct LinearLayer {
  DenseMatrix<S> weight;
  std::vector<S> bias;  // empty when the layer is bias-free

  int out_dim() const { return weight.rows; }
  int in_dim() const { return weight.cols; }

  void init(Rng& rng, int out, int in, bool with_bias = true) {
    weight = init_params<S>(rng, out, in);
    bias.assign(with_bias ? out : 0, S(0));
  }
};

template <class S>
struct LinearGrads {
  DenseMatrix<S> weight;
  std::vector<S> bias;

  void match(const LinearLayer<S>& layer) {
    weight = DenseMatrix<S>(layer.weight.rows, layer.weight.cols);
    bias.assign(layer.bias.size(), S(0));
  }
  void set_zero() {
    weight.set_zero();
    std::fill(bias.begin(), bias.end(), S(0));
  }
};

/// out = W x + b
template <class S>
void linear_forward(const LinearLayer<S>& layer, std::span<const S> input,
                    std::span<S> out) {
  check_lengths(input.size(), std::size_t(layer.in_dim()), "linear_forward input");
  check_lengths(out.size(), std::size_t(layer.out_dim()), "linear_forward output");
  const int rows = layer.out_dim(), cols = layer.in_dim();
  for (int i = 0; i < rows; ++i) {
    const S* w = layer.weight.row(i);
    S acc = layer.bias.empty() ? S(0) : layer.bias[i];
    for (int j = 0; j < cols; ++j) acc += w[j] * input[j];
    out[i] = acc;
  }
}

/// Accumulates dW += g (x) input, db += g. Writes grad wrt input (W^T g)
/// into grad_in unless it is empty.
template <class S>
void linear_backward(const LinearLayer<S>& layer, LinearGrads<S>& grads,
                     std::span<const S> input, std::span<const S> grad_out,
                     std::span<S> grad_in) {
  check_lengths(input.size(), std::size_t(layer.in_dim()), "linear_backward input");
  check_lengths(grad_out.size(), std::size_t(layer.out_dim()),
                "linear_backward grad_out");
  if (!grad_in.empty()) {
    check_lengths(grad_in.size(), std::size_t(layer.in_dim()),
                  "linear_backward grad_in");
    std::fill(grad_in.begin(), grad_in.end(), S(0));
  }
  const int rows = layer.out_dim(), cols = layer.in_dim();
  for (int i = 0; i < rows; ++i) {
    const S g = grad_out[i];
    S* dw = grads.weight.row(i);
    if (!grads.bias.empty()) grads.bias[i] += g;
    if (g == S(0)) continue;
    const S* w = layer.weight.row(i);
    if (grad_in.empty()) {
      for (int j = 0; j < cols; ++j) dw[j] += g * input[j];
    } else {
      for (int j = 0; j < cols; ++j) {
        dw[j] += g * input[j];
        grad_in[j] += w[j] * g;
      }
    }
  }
}

template <class S>
void relu_forward(std::span<const S> input, std::span<S> out) {
  check_lengths(input.size(), out.size(), "relu_forward");
  for (std::size_t i = 0; i < input.size(); ++i)
    out[i] = input[i] > S(0) ? input[i] : S(0);
}

/// Subgradient at 0 is 0: gradient passes only where the input was > 0,
/// which is equivalent to activation > 0.
template <class S>
void relu_backward(std::span<const S> activation, std::span<const S> grad_out,
                   std::span<S> grad_in) {
  check_lengths(activation.size(), grad_out.size(), "relu_backward");
  check_lengths(activation.size(), grad_in.size(), "relu_backward");
  for (std::size_t i = 0; i < activation.size(); ++i)
    grad_in[i] = activation[i] > S(0) ? grad_out[i] : S(0);
}

template <class S>
S sigmoid_scalar(S x) {
  if (x >= S(0)) {
    S t = std::exp(-x);
    return S(1) / (S(1) + t);
  }
  S t = std::exp(x);
  return t / (S(1) + t);
}

template <class S>
void sigmoid_forward(std::span<const S> input, std::span<S> out) {
  check_lengths(input.size(), out.size(), "sigmoid_forward");
  for (std::size_t i = 0; i < input.size(); ++i)
    out[i] = sigmoid_scalar(input[i]);
}

/// grad_in = s (1 - s) grad_out, with s the cached activation.
template <class S>
void sigmoid_backward(std::span<const S> activation, std::span<const S> grad_out,
                      std::span<S> grad_in) {
  check_lengths(activation.size(), grad_out.size(), "sigmoid_backward");
  check_lengths(activation.size(), grad_in.size(), "sigmoid_backward");
  for (std::size_t i = 0; i < activation.size(); ++i) {
    const S s = activation[i];
    grad_in[i] = s * (S(1) - s) * grad_out[i];
  }
}

/// loss = (1/h) sum (a_i - b_i)^2. grad_a = (2/h)(a - b); the gradient wrt
/// b is its negation and both sides receive it during training.
template <class S>
S mse_loss(std::span<const S> a, std::span<const S> b, std::span<S> grad_a) {
  check_lengths(a.size(), b.size(), "mse_loss");
  check_lengths(a.size(), grad_a.size(), "mse_loss grad");
  const std::size_t h = a.size();
  double acc = 0;
  const S scale = S(2) / S(h);
  for (std::size_t i = 0; i < h; ++i) {
    const S d = a[i] - b[i];
    acc += double(d) * double(d);
    grad_a[i] = scale * d;
  }
  return S(acc / double(h));
}

}  // namespace rankae
