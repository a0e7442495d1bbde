#include "hrgc/layers/attention.hpp"

#include <cmath>

#include "hrgc/errors.hpp"
#include "hrgc/numerics/ops.hpp"

namespace hrgc {

template <typename Real>
Tensor<Real> positional_encoding(std::size_t length, std::size_t dim) {
  if (length == 0 || dim == 0) throw ContractError("positional_encoding: length and dim must be positive");
  std::vector<Real> values(length * dim);
  const double d = static_cast<double>(dim);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t col = 0; col < dim; ++col) {
      const double two_j = static_cast<double>(col - col % 2);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, two_j / d);
      values[pos * dim + col] = static_cast<Real>(col % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return Tensor<Real>::from_values({length, dim}, std::move(values));
}

template <typename Real>
AttentionResult<Real> attention_head_detailed(const Tensor<Real>& z, const Tensor<Real>& w_query,
                                              const Tensor<Real>& w_key, const Tensor<Real>& w_value) {
  if (z.rank() != 2) throw ShapeError("attention_head: Z must be L x width, got " + shape_to_string(z.shape()));
  if (w_query.shape() != w_key.shape() || w_value.rank() != 2 || w_query.rank() != 2 ||
      w_value.rows() != w_query.rows()) {
    throw ShapeError("attention_head: projection shapes disagree, W_q " + shape_to_string(w_query.shape()) +
                     ", W_k " + shape_to_string(w_key.shape()) + ", W_v " + shape_to_string(w_value.shape()));
  }
  const Tensor<Real> q = matmul(z, w_query);
  const Tensor<Real> k = matmul(z, w_key);
  const Tensor<Real> v = matmul(z, w_value);
  const Real inv_sqrt_dk = Real(1) / std::sqrt(static_cast<Real>(w_key.cols()));
  const Tensor<Real> weights = softmax_rows(scale(matmul(q, transpose(k)), inv_sqrt_dk));
  return {matmul(weights, v), weights};
}

template Tensor<float> positional_encoding<float>(std::size_t, std::size_t);
template Tensor<double> positional_encoding<double>(std::size_t, std::size_t);
template AttentionResult<float> attention_head_detailed(const Tensor<float>&, const Tensor<float>&,
                                                        const Tensor<float>&, const Tensor<float>&);
template AttentionResult<double> attention_head_detailed(const Tensor<double>&, const Tensor<double>&,
                                                         const Tensor<double>&, const Tensor<double>&);

}  // namespace hrgc
