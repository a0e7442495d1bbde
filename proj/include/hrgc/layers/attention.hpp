#pragma once

#include <cstddef>
#include <vector>

#include "hrgc/layers/common.hpp"

namespace hrgc {

// L x d sinusoidal table: column 2j holds sin(pos / 10000^(2j/d)), column
// 2j+1 the matching cosine. For odd d the last column is a sine column.
template <typename Real>
Tensor<Real> positional_encoding(std::size_t length, std::size_t dim);

template <typename Real>
struct AttentionHeadParams {
  Tensor<Real> w_query;  // width x d_head
  Tensor<Real> w_key;
  Tensor<Real> w_value;
};

template <typename Real>
struct AttentionResult {
  Tensor<Real> output;   // L x d_head
  Tensor<Real> weights;  // L x L, rows sum to one
};

// softmax(Q K^T / sqrt(d_k)) V with Q = Z W_q, K = Z W_k, V = Z W_v. No mask:
// every position attends to the whole sequence.
template <typename Real>
AttentionResult<Real> attention_head_detailed(const Tensor<Real>& z, const Tensor<Real>& w_query,
                                              const Tensor<Real>& w_key, const Tensor<Real>& w_value);

template <typename Real>
Tensor<Real> attention_head(const Tensor<Real>& z, const Tensor<Real>& w_query, const Tensor<Real>& w_key,
                            const Tensor<Real>& w_value) {
  return attention_head_detailed(z, w_query, w_key, w_value).output;
}

}  // namespace hrgc
