#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hrgc/numerics/random.hpp"
#include "hrgc/numerics/tensor.hpp"

namespace hrgc {

template <typename Real>
struct NamedTensor {
  std::string name;
  Tensor<Real> tensor;
};

template <typename Real>
using ParameterList = std::vector<NamedTensor<Real>>;

// Trainable rows x cols matrix drawn uniformly from +-sqrt(6 / (rows + cols)).
template <typename Real>
Tensor<Real> glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

// Trainable vector of constant value (zero biases, unit layer-norm gains).
template <typename Real>
Tensor<Real> constant_parameter(std::size_t n, Real value);

/// Affine map x * weight + bias applied to every row of x.
template <typename Real>
struct Linear {
  Tensor<Real> weight;  // in x out
  Tensor<Real> bias;    // out

  static Linear init(std::size_t in, std::size_t out, Rng& rng);
  Tensor<Real> apply(const Tensor<Real>& x) const;
  std::size_t in_features() const { return weight.rows(); }
  std::size_t out_features() const { return weight.cols(); }
  void collect(ParameterList<Real>& out, const std::string& prefix) const;
};

}  // namespace hrgc
