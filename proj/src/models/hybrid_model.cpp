#include "hrgc/models/hybrid_model.hpp"

#include <string>

#include "hrgc/errors.hpp"
#include "hrgc/layers/attention.hpp"
#include "hrgc/numerics/ops.hpp"

namespace hrgc {

template <typename Real>
HybridModel<Real> HybridModel<Real>::build(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  HybridModel m;
  m.spec = spec;
  m.input_projection = Linear<Real>::init(spec.input_channels, spec.d_model, rng);
  m.lstm = LstmParams<Real>::init(spec.d_model, spec.lstm_hidden, rng);
  for (std::size_t b = 0; b < spec.num_encoder_blocks; ++b) {
    auto block = EncoderParams<Real>::init(spec.encoder_width(), spec.num_heads, spec.d_head(), spec.d_ff, rng);
    block.dropout_rate = spec.dropout_rate;
    m.encoders.push_back(std::move(block));
  }
  if (spec.variant == Variant::ParallelLstmTransformer) {
    m.fusion = Linear<Real>::init(spec.lstm_hidden + spec.d_model, spec.d_model, rng);
  }
  m.head = Linear<Real>::init(spec.head_width(), 1, rng);
  return m;
}

template <typename Real>
Tensor<Real> HybridModel<Real>::forward(const Tensor<Real>& x, const ForwardOptions& options) const {
  if (x.rank() != 2 || x.cols() != spec.input_channels) {
    throw ShapeError("forward: expected N x " + std::to_string(spec.input_channels) + " input, got " +
                     shape_to_string(x.shape()));
  }
  const std::size_t n = x.rows();
  auto run_encoders = [&](Tensor<Real> z) {
    if (options.bypass_encoders) return z;
    z = add(z, positional_encoding<Real>(n, z.cols()));
    for (const auto& block : encoders) z = encoder_block(z, block, options.dropout_rng);
    return z;
  };

  const Tensor<Real> projected = input_projection.apply(x);
  switch (spec.variant) {
    case Variant::TransformerThenLstm:
      return head.apply(lstm_layer(lstm, run_encoders(projected)));
    case Variant::LstmThenTransformer:
      return head.apply(run_encoders(lstm_layer(lstm, projected)));
    case Variant::ParallelLstmTransformer: {
      const Tensor<Real> joined = concat_cols<Real>({lstm_layer(lstm, projected), run_encoders(projected)});
      return head.apply(fusion->apply(joined));
    }
  }
  throw ConfigError("forward: unknown variant");
}

template <typename Real>
ParameterList<Real> HybridModel<Real>::named_parameters() const {
  ParameterList<Real> out;
  input_projection.collect(out, "input_projection");
  lstm.collect(out, "lstm");
  for (std::size_t b = 0; b < encoders.size(); ++b) encoders[b].collect(out, "encoder" + std::to_string(b));
  if (fusion) fusion->collect(out, "fusion");
  head.collect(out, "head");
  return out;
}

template <typename Real>
std::vector<Tensor<Real>> HybridModel<Real>::parameters() const {
  std::vector<Tensor<Real>> out;
  for (auto& named : named_parameters()) out.push_back(named.tensor);
  return out;
}

template <typename Real>
std::size_t HybridModel<Real>::param_count() const {
  std::size_t total = 0;
  for (const auto& named : named_parameters()) total += named.tensor.numel();
  return total;
}

template struct HybridModel<float>;
template struct HybridModel<double>;

}  // namespace hrgc
