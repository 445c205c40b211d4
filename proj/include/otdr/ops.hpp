// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "otdr/tensor.hpp"

namespace otdr::nn {

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // Hadamard
Tensor scale(const Tensor& a, real c);

enum class Activation { Elu, Sigmoid, Tanh };
Tensor activate(const Tensor& x, Activation kind);
inline Tensor elu(const Tensor& x) { return activate(x, Activation::Elu); }
inline Tensor sigmoid(const Tensor& x) { return activate(x, Activation::Sigmoid); }
inline Tensor tanh_act(const Tensor& x) { return activate(x, Activation::Tanh); }

// ---- reductions ----
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// ---- affine / convolution ----
// y[b,m] = x[b,n] . W[m,n]^T + bias[m]
Tensor dense(const Tensor& x, const Tensor& w, const Tensor& bias);

// Cross-correlation with zero "same" padding: x[b,ci,L], w[co,ci,k] ->
// y[b,co,ceil(L/stride)]. Odd pad totals put the extra zero on the right.
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride);

// Adjoint of conv1d for the matched geometry: x[b,c1,L], w[c1,c2,k] ->
// y[b,c2,L*stride].
Tensor conv1d_transpose(const Tensor& x, const Tensor& w, const Tensor& bias, int stride);

inline int conv_out_len(int len, int stride) { return (len + stride - 1) / stride; }

// ---- batch normalization over [b,c,L], statistics per channel ----
struct BatchNorm1d {
  Parameter gamma;
  Parameter beta;
  std::vector<real> running_mean;
  std::vector<real> running_var;
  real momentum = 0.1;
  real eps = 1e-5;

  BatchNorm1d() = default;
  BatchNorm1d(const std::string& name, int channels);
  Tensor forward(const Tensor& x, bool train);
};

// ---- structure ----
Tensor slice_cols(const Tensor& x, int start, int len);        // [b,n] -> [b,len]
Tensor concat_cols(const Tensor& a, const Tensor& b);          // [b,n1]+[b,n2] -> [b,n1+n2]
Tensor stack_steps(const std::vector<Tensor>& steps);          // T x [b,f] -> [b,T,f]
Tensor reshape(const Tensor& x, Shape shape);                  // same numel

// ---- losses ----
Tensor mse_loss(const Tensor& pred, const Tensor& target);
// logits [b,C], integer class labels; mean of -log softmax(logits)[label],
// stabilized by max subtraction.
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// Row-wise softmax probabilities (no graph; inference helper).
std::vector<real> softmax_probs(const Tensor& logits, int row = 0);

}  // namespace otdr::nn
