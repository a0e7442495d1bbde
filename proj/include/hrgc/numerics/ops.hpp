#pragma once

#include <cstddef>
#include <vector>

#include "hrgc/numerics/random.hpp"
#include "hrgc/numerics/tensor.hpp"

namespace hrgc {

// All ops are differentiable. Matrix ops treat a rank-1 tensor of length n
// as a 1 x n row.

template <typename Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b);

template <typename Real>
Tensor<Real> transpose(const Tensor<Real>& a);

// Elementwise, identical shapes.
template <typename Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b);
template <typename Real>
Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b);
template <typename Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b);
template <typename Real>
Tensor<Real> scale(const Tensor<Real>& a, Real factor);

// m (r x c) plus a length-c bias added to every row.
template <typename Real>
Tensor<Real> add_row_broadcast(const Tensor<Real>& m, const Tensor<Real>& bias);

template <typename Real>
Tensor<Real> sigmoid(const Tensor<Real>& t);
template <typename Real>
Tensor<Real> tanh_act(const Tensor<Real>& t);
// Subgradient at exactly 0 is 0.
template <typename Real>
Tensor<Real> relu(const Tensor<Real>& t);
// Row-wise softmax with max subtraction.
template <typename Real>
Tensor<Real> softmax_rows(const Tensor<Real>& m);

// Per-row normalization: (z - mean) / sqrt(var + eps), then gain * x + bias.
template <typename Real>
Tensor<Real> layer_norm(const Tensor<Real>& z, const Tensor<Real>& gain, const Tensor<Real>& bias,
                        Real eps = Real(1e-5));

template <typename Real>
Tensor<Real> concat_cols(const std::vector<Tensor<Real>>& parts);
// Columns [begin, end).
template <typename Real>
Tensor<Real> slice_cols(const Tensor<Real>& m, std::size_t begin, std::size_t end);
// Row r as a 1 x c tensor.
template <typename Real>
Tensor<Real> row(const Tensor<Real>& m, std::size_t r);
// Stacks 1 x c rows into an n x c matrix.
template <typename Real>
Tensor<Real> stack_rows(const std::vector<Tensor<Real>>& rows);

template <typename Real>
Tensor<Real> sum(const Tensor<Real>& t);
template <typename Real>
Tensor<Real> mean(const Tensor<Real>& t);
// Mean of squared differences; gradients flow to both arguments.
template <typename Real>
Tensor<Real> mse_loss(const Tensor<Real>& prediction, const Tensor<Real>& target);

// Inverted dropout: zeroes each entry with probability `rate` and rescales
// survivors by 1 / (1 - rate). rate == 0 is the identity.
template <typename Real>
Tensor<Real> dropout(const Tensor<Real>& t, double rate, Rng& rng);

template <typename Real>
Tensor<Real> operator+(const Tensor<Real>& a, const Tensor<Real>& b) {
  return add(a, b);
}
template <typename Real>
Tensor<Real> operator-(const Tensor<Real>& a, const Tensor<Real>& b) {
  return sub(a, b);
}

}  // namespace hrgc
