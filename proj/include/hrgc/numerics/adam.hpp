#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hrgc/numerics/tensor.hpp"

namespace hrgc {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Optimizer state for one ordered parameter list. Moment buffers start at
/// zero and are laid out parallel to the parameters.
template <typename Real>
struct AdamState {
  AdamConfig config;
  std::uint64_t step_count = 0;
  std::vector<std::vector<Real>> first_moment;
  std::vector<std::vector<Real>> second_moment;

  AdamState() = default;
  AdamState(std::span<const Tensor<Real>> params, AdamConfig cfg);
};

// Bias-corrected Adam update using each parameter's accumulated grad.
template <typename Real>
void adam_step(std::span<Tensor<Real>> params, AdamState<Real>& state);

}  // namespace hrgc
