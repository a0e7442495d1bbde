#include "hrgc/layers/lstm.hpp"

#include <string>

#include "hrgc/errors.hpp"
#include "hrgc/numerics/ops.hpp"

namespace hrgc {

template <typename Real>
LstmParams<Real> LstmParams<Real>::init(std::size_t input_size, std::size_t hidden_size, Rng& rng) {
  LstmParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  const std::size_t fan_in = hidden_size + input_size;
  p.w_forget = glorot_uniform<Real>(hidden_size, fan_in, rng);
  p.w_input = glorot_uniform<Real>(hidden_size, fan_in, rng);
  p.w_candidate = glorot_uniform<Real>(hidden_size, fan_in, rng);
  p.w_output = glorot_uniform<Real>(hidden_size, fan_in, rng);
  p.b_forget = constant_parameter<Real>(hidden_size, Real(0));
  p.b_input = constant_parameter<Real>(hidden_size, Real(0));
  p.b_candidate = constant_parameter<Real>(hidden_size, Real(0));
  p.b_output = constant_parameter<Real>(hidden_size, Real(0));
  return p;
}

template <typename Real>
LstmParams<Real> LstmParams<Real>::zeros(std::size_t input_size, std::size_t hidden_size) {
  LstmParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  const Shape w{hidden_size, hidden_size + input_size};
  p.w_forget = Tensor<Real>::zeros(w, true);
  p.w_input = Tensor<Real>::zeros(w, true);
  p.w_candidate = Tensor<Real>::zeros(w, true);
  p.w_output = Tensor<Real>::zeros(w, true);
  p.b_forget = constant_parameter<Real>(hidden_size, Real(0));
  p.b_input = constant_parameter<Real>(hidden_size, Real(0));
  p.b_candidate = constant_parameter<Real>(hidden_size, Real(0));
  p.b_output = constant_parameter<Real>(hidden_size, Real(0));
  return p;
}

template <typename Real>
void LstmParams<Real>::validate() const {
  const Shape w{hidden_size, hidden_size + input_size};
  for (const Tensor<Real>* t : {&w_forget, &w_input, &w_candidate, &w_output}) {
    if (t->shape() != w) {
      throw ShapeError("LSTM weight " + shape_to_string(t->shape()) + " expected " + shape_to_string(w));
    }
  }
  for (const Tensor<Real>* t : {&b_forget, &b_input, &b_candidate, &b_output}) {
    if (t->numel() != hidden_size) {
      throw ShapeError("LSTM bias " + shape_to_string(t->shape()) + " expected length " + std::to_string(hidden_size));
    }
  }
}

template <typename Real>
void LstmParams<Real>::collect(ParameterList<Real>& out, const std::string& prefix) const {
  out.push_back({prefix + ".w_forget", w_forget});
  out.push_back({prefix + ".w_input", w_input});
  out.push_back({prefix + ".w_candidate", w_candidate});
  out.push_back({prefix + ".w_output", w_output});
  out.push_back({prefix + ".b_forget", b_forget});
  out.push_back({prefix + ".b_input", b_input});
  out.push_back({prefix + ".b_candidate", b_candidate});
  out.push_back({prefix + ".b_output", b_output});
}

template <typename Real>
LstmState<Real> LstmState<Real>::zeros(std::size_t hidden_size) {
  return {Tensor<Real>::zeros({1, hidden_size}), Tensor<Real>::zeros({1, hidden_size})};
}

template <typename Real>
LstmState<Real> lstm_cell_step(const LstmParams<Real>& p, const LstmState<Real>& prev, const Tensor<Real>& input) {
  if (input.numel() != p.input_size) {
    throw ShapeError("lstm_cell_step: input " + shape_to_string(input.shape()) + " expected " +
                     std::to_string(p.input_size) + " values");
  }
  if (prev.h.numel() != p.hidden_size || prev.c.numel() != p.hidden_size) {
    throw ShapeError("lstm_cell_step: state " + shape_to_string(prev.h.shape()) + "/" +
                     shape_to_string(prev.c.shape()) + " expected hidden size " + std::to_string(p.hidden_size));
  }
  const Tensor<Real> joined = concat_cols<Real>({prev.h, input});
  auto gate = [&joined](const Tensor<Real>& w, const Tensor<Real>& b) {
    return add_row_broadcast(matmul(joined, transpose(w)), b);
  };
  const Tensor<Real> forget = sigmoid(gate(p.w_forget, p.b_forget));
  const Tensor<Real> in = sigmoid(gate(p.w_input, p.b_input));
  const Tensor<Real> candidate = tanh_act(gate(p.w_candidate, p.b_candidate));
  const Tensor<Real> out = sigmoid(gate(p.w_output, p.b_output));
  // A rank-1 cell state is lifted to 1 x hidden to match the gates.
  const Tensor<Real> prev_c = prev.c.rank() == 1 ? concat_cols<Real>({prev.c}) : prev.c;
  Tensor<Real> c = add(mul(forget, prev_c), mul(in, candidate));
  Tensor<Real> h = mul(out, tanh_act(c));
  return {h, c};
}

template <typename Real>
Tensor<Real> lstm_layer(const LstmParams<Real>& p, const Tensor<Real>& sequence) {
  if (sequence.rank() != 2 || sequence.rows() == 0) {
    throw ContractError("lstm_layer: expected a non-empty L x input sequence, got " +
                        shape_to_string(sequence.shape()));
  }
  if (sequence.cols() != p.input_size) {
    throw ShapeError("lstm_layer: sequence " + shape_to_string(sequence.shape()) + " expected " +
                     std::to_string(p.input_size) + " columns");
  }
  const std::size_t hidden = p.hidden_size;
  const std::size_t input = p.input_size;

  // Split every gate matrix into its recurrent and input halves and stack the
  // four gates side by side, so one step costs a single 1 x hidden product and
  // the input contribution for all positions is one L x 4H product.
  std::vector<Tensor<Real>> recurrent_parts;
  std::vector<Tensor<Real>> input_parts;
  std::vector<Tensor<Real>> bias_parts;
  for (const auto& [w, b] : {std::pair{&p.w_forget, &p.b_forget}, std::pair{&p.w_input, &p.b_input},
                             std::pair{&p.w_candidate, &p.b_candidate}, std::pair{&p.w_output, &p.b_output}}) {
    recurrent_parts.push_back(transpose(slice_cols(*w, 0, hidden)));
    input_parts.push_back(transpose(slice_cols(*w, hidden, hidden + input)));
    bias_parts.push_back(*b);
  }
  const Tensor<Real> recurrent = concat_cols(recurrent_parts);  // H x 4H
  const Tensor<Real> projected =
      add_row_broadcast(matmul(sequence, concat_cols(input_parts)), concat_cols(bias_parts));  // L x 4H

  Tensor<Real> h = Tensor<Real>::zeros({1, hidden});
  Tensor<Real> c = Tensor<Real>::zeros({1, hidden});
  std::vector<Tensor<Real>> outputs;
  outputs.reserve(sequence.rows());
  for (std::size_t x = 0; x < sequence.rows(); ++x) {
    const Tensor<Real> gates = add(row(projected, x), matmul(h, recurrent));
    const Tensor<Real> forget = sigmoid(slice_cols(gates, 0, hidden));
    const Tensor<Real> in = sigmoid(slice_cols(gates, hidden, 2 * hidden));
    const Tensor<Real> candidate = tanh_act(slice_cols(gates, 2 * hidden, 3 * hidden));
    const Tensor<Real> out = sigmoid(slice_cols(gates, 3 * hidden, 4 * hidden));
    c = add(mul(forget, c), mul(in, candidate));
    h = mul(out, tanh_act(c));
    outputs.push_back(h);
  }
  return stack_rows(outputs);
}

template struct LstmParams<float>;
template struct LstmParams<double>;
template struct LstmState<float>;
template struct LstmState<double>;
template LstmState<float> lstm_cell_step(const LstmParams<float>&, const LstmState<float>&, const Tensor<float>&);
template LstmState<double> lstm_cell_step(const LstmParams<double>&, const LstmState<double>&, const Tensor<double>&);
template Tensor<float> lstm_layer(const LstmParams<float>&, const Tensor<float>&);
template Tensor<double> lstm_layer(const LstmParams<double>&, const Tensor<double>&);

}  // namespace hrgc
