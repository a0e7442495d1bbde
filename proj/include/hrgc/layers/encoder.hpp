#pragma once

#include <cstddef>
#include <vector>

#include "hrgc/layers/attention.hpp"
#include "hrgc/layers/common.hpp"

namespace hrgc {

/// Parameters of one encoder block. `width` is the feature width of the
/// residual stream; the attention heads project it to d_head each and the
/// concatenated heads (num_heads * d_head) are mapped back by w_out.
template <typename Real>
struct EncoderParams {
  std::size_t width = 0;
  std::size_t num_heads = 0;
  std::size_t d_head = 0;
  std::size_t d_ff = 0;
  // Dropout slot after each sub-layer. Kept at zero for the shipped models.
  double dropout_rate = 0.0;

  std::vector<AttentionHeadParams<Real>> heads;
  Tensor<Real> w_out;  // (num_heads * d_head) x width
  Tensor<Real> w_ff1;  // width x d_ff
  Tensor<Real> b_ff1;  // d_ff
  Tensor<Real> w_ff2;  // d_ff x width
  Tensor<Real> b_ff2;  // width
  Tensor<Real> ln1_gain, ln1_bias;
  Tensor<Real> ln2_gain, ln2_bias;

  static EncoderParams init(std::size_t width, std::size_t num_heads, std::size_t d_head, std::size_t d_ff, Rng& rng);
  void collect(ParameterList<Real>& out, const std::string& prefix) const;
};

// Heads concatenated along the feature axis, then multiplied by w_out.
template <typename Real>
Tensor<Real> multi_head_attention(const Tensor<Real>& z, const EncoderParams<Real>& p);

// relu(z W_1 + b_1) W_2 + b_2 applied to each row independently.
template <typename Real>
Tensor<Real> feed_forward(const Tensor<Real>& z, const EncoderParams<Real>& p);

// Post-norm block:
//   out1 = layer_norm(Z + attention(Z))
//   out2 = layer_norm(out1 + feed_forward(out1))
// Dropout is applied to each sub-layer output only when `dropout_rng` is
// given and the block's rate is non-zero.
template <typename Real>
Tensor<Real> encoder_block(const Tensor<Real>& z, const EncoderParams<Real>& p, Rng* dropout_rng = nullptr);

}  // namespace hrgc
