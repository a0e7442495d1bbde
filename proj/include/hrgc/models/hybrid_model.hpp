#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hrgc/layers/common.hpp"
#include "hrgc/layers/encoder.hpp"
#include "hrgc/layers/lstm.hpp"
#include "hrgc/models/model_spec.hpp"

namespace hrgc {

struct ForwardOptions {
  // Enables the encoders' dropout slot (training only).
  Rng* dropout_rng = nullptr;
  // Replaces every encoder block with the identity. Used to study the
  // causality of the LSTM path in isolation.
  bool bypass_encoders = false;
};

/// One of the three hybrid sequence-to-sequence networks:
///
///   1: project -> +PE -> encoders -> LSTM -> head
///   2: project -> LSTM -> +PE -> encoders -> head
///   3: project -> { LSTM | +PE -> encoders } -> concat -> fusion -> head
///
/// Input is N x input_channels standardized sensor data, output N x 1.
template <typename Real>
struct HybridModel {
  ModelSpec spec;
  Linear<Real> input_projection;  // input_channels -> d_model
  LstmParams<Real> lstm;
  std::vector<EncoderParams<Real>> encoders;
  std::optional<Linear<Real>> fusion;  // variant 3: (lstm_hidden + d_model) -> d_model
  Linear<Real> head;                   // head_width -> 1

  // Deterministic in (spec, seed).
  static HybridModel build(const ModelSpec& spec, std::uint64_t seed);

  Tensor<Real> forward(const Tensor<Real>& x, const ForwardOptions& options = {}) const;

  // Every trainable tensor in declaration order; the order is the checkpoint
  // layout.
  ParameterList<Real> named_parameters() const;
  std::vector<Tensor<Real>> parameters() const;
  std::size_t param_count() const;
  bool has_fusion() const { return fusion.has_value(); }
};

}  // namespace hrgc
