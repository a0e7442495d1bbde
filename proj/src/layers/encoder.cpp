#include "hrgc/layers/encoder.hpp"

#include <string>

#include "hrgc/errors.hpp"
#include "hrgc/numerics/ops.hpp"

namespace hrgc {

template <typename Real>
EncoderParams<Real> EncoderParams<Real>::init(std::size_t width, std::size_t num_heads, std::size_t d_head,
                                              std::size_t d_ff, Rng& rng) {
  if (width == 0 || num_heads == 0 || d_head == 0 || d_ff == 0) {
    throw ConfigError("EncoderParams: all dimensions must be positive");
  }
  EncoderParams p;
  p.width = width;
  p.num_heads = num_heads;
  p.d_head = d_head;
  p.d_ff = d_ff;
  for (std::size_t h = 0; h < num_heads; ++h) {
    AttentionHeadParams<Real> head;
    head.w_query = glorot_uniform<Real>(width, d_head, rng);
    head.w_key = glorot_uniform<Real>(width, d_head, rng);
    head.w_value = glorot_uniform<Real>(width, d_head, rng);
    p.heads.push_back(std::move(head));
  }
  p.w_out = glorot_uniform<Real>(num_heads * d_head, width, rng);
  p.w_ff1 = glorot_uniform<Real>(width, d_ff, rng);
  p.b_ff1 = constant_parameter<Real>(d_ff, Real(0));
  p.w_ff2 = glorot_uniform<Real>(d_ff, width, rng);
  p.b_ff2 = constant_parameter<Real>(width, Real(0));
  p.ln1_gain = constant_parameter<Real>(width, Real(1));
  p.ln1_bias = constant_parameter<Real>(width, Real(0));
  p.ln2_gain = constant_parameter<Real>(width, Real(1));
  p.ln2_bias = constant_parameter<Real>(width, Real(0));
  return p;
}

template <typename Real>
void EncoderParams<Real>::collect(ParameterList<Real>& out, const std::string& prefix) const {
  for (std::size_t h = 0; h < heads.size(); ++h) {
    const std::string head = prefix + ".head" + std::to_string(h);
    out.push_back({head + ".w_query", heads[h].w_query});
    out.push_back({head + ".w_key", heads[h].w_key});
    out.push_back({head + ".w_value", heads[h].w_value});
  }
  out.push_back({prefix + ".w_out", w_out});
  out.push_back({prefix + ".w_ff1", w_ff1});
  out.push_back({prefix + ".b_ff1", b_ff1});
  out.push_back({prefix + ".w_ff2", w_ff2});
  out.push_back({prefix + ".b_ff2", b_ff2});
  out.push_back({prefix + ".ln1_gain", ln1_gain});
  out.push_back({prefix + ".ln1_bias", ln1_bias});
  out.push_back({prefix + ".ln2_gain", ln2_gain});
  out.push_back({prefix + ".ln2_bias", ln2_bias});
}

template <typename Real>
Tensor<Real> multi_head_attention(const Tensor<Real>& z, const EncoderParams<Real>& p) {
  if (p.heads.size() != p.num_heads || p.w_out.rank() != 2 || p.w_out.rows() != p.num_heads * p.d_head) {
    throw ContractError("multi_head_attention: " + std::to_string(p.heads.size()) + " heads of width " +
                        std::to_string(p.d_head) + " do not match output projection " +
                        shape_to_string(p.w_out.shape()));
  }
  std::vector<Tensor<Real>> outputs;
  outputs.reserve(p.heads.size());
  for (const auto& head : p.heads) {
    if (head.w_query.cols() != p.d_head) {
      throw ContractError("multi_head_attention: head projection " + shape_to_string(head.w_query.shape()) +
                          " does not have d_head = " + std::to_string(p.d_head) + " columns");
    }
    outputs.push_back(attention_head(z, head.w_query, head.w_key, head.w_value));
  }
  return matmul(outputs.size() == 1 ? outputs.front() : concat_cols(outputs), p.w_out);
}

template <typename Real>
Tensor<Real> feed_forward(const Tensor<Real>& z, const EncoderParams<Real>& p) {
  return add_row_broadcast(matmul(relu(add_row_broadcast(matmul(z, p.w_ff1), p.b_ff1)), p.w_ff2), p.b_ff2);
}

template <typename Real>
Tensor<Real> encoder_block(const Tensor<Real>& z, const EncoderParams<Real>& p, Rng* dropout_rng) {
  if (z.rank() != 2 || z.cols() != p.width) {
    throw ShapeError("encoder_block: input " + shape_to_string(z.shape()) + " expected width " +
                     std::to_string(p.width));
  }
  const bool drop = dropout_rng != nullptr && p.dropout_rate > 0.0;
  Tensor<Real> attended = multi_head_attention(z, p);
  if (drop) attended = dropout(attended, p.dropout_rate, *dropout_rng);
  const Tensor<Real> out1 = layer_norm(add(z, attended), p.ln1_gain, p.ln1_bias);
  Tensor<Real> transformed = feed_forward(out1, p);
  if (drop) transformed = dropout(transformed, p.dropout_rate, *dropout_rng);
  return layer_norm(add(out1, transformed), p.ln2_gain, p.ln2_bias);
}

template struct EncoderParams<float>;
template struct EncoderParams<double>;
template Tensor<float> multi_head_attention(const Tensor<float>&, const EncoderParams<float>&);
template Tensor<double> multi_head_attention(const Tensor<double>&, const EncoderParams<double>&);
template Tensor<float> feed_forward(const Tensor<float>&, const EncoderParams<float>&);
template Tensor<double> feed_forward(const Tensor<double>&, const EncoderParams<double>&);
template Tensor<float> encoder_block(const Tensor<float>&, const EncoderParams<float>&, Rng*);
template Tensor<double> encoder_block(const Tensor<double>&, const EncoderParams<double>&, Rng*);

}  // namespace hrgc
