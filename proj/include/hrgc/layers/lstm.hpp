#pragma once

#include <cstddef>

#include "hrgc/layers/common.hpp"

namespace hrgc {

/// Gate weights act on the concatenation [h_{x-1}, y_x], hidden part first,
/// so every matrix is hidden x (hidden + input).
template <typename Real>
struct LstmParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Tensor<Real> w_forget, w_input, w_candidate, w_output;
  Tensor<Real> b_forget, b_input, b_candidate, b_output;

  static LstmParams init(std::size_t input_size, std::size_t hidden_size, Rng& rng);
  static LstmParams zeros(std::size_t input_size, std::size_t hidden_size);

  void validate() const;
  void collect(ParameterList<Real>& out, const std::string& prefix) const;
};

template <typename Real>
struct LstmState {
  Tensor<Real> h;  // 1 x hidden
  Tensor<Real> c;  // 1 x hidden

  static LstmState zeros(std::size_t hidden_size);
};

// One step of the memory cell: forget/input/output gates, candidate state,
// new cell state and hidden state. `input` is 1 x input_size.
template <typename Real>
LstmState<Real> lstm_cell_step(const LstmParams<Real>& p, const LstmState<Real>& prev, const Tensor<Real>& input);

// Unrolls the cell left to right over an L x input sequence from the zero
// state; row x of the result is h_x.
template <typename Real>
Tensor<Real> lstm_layer(const LstmParams<Real>& p, const Tensor<Real>& sequence);

}  // namespace hrgc
