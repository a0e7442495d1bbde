#include "hrgc/numerics/adam.hpp"

#include <cmath>
#include <string>

#include "hrgc/errors.hpp"

namespace hrgc {

template <typename Real>
AdamState<Real>::AdamState(std::span<const Tensor<Real>> params, AdamConfig cfg) : config(cfg) {
  if (!(cfg.learning_rate >= 0.0)) throw ConfigError("Adam: learning rate must be non-negative");
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const auto& p : params) {
    first_moment.emplace_back(p.numel(), Real(0));
    second_moment.emplace_back(p.numel(), Real(0));
  }
}

template <typename Real>
void adam_step(std::span<Tensor<Real>> params, AdamState<Real>& state) {
  if (params.size() != state.first_moment.size() || params.size() != state.second_moment.size()) {
    throw ContractError("adam_step: " + std::to_string(params.size()) + " parameters but state holds " +
                        std::to_string(state.first_moment.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].numel() != state.first_moment[k].size() || params[k].numel() != state.second_moment[k].size()) {
      throw ContractError("adam_step: parameter " + std::to_string(k) + " has shape " +
                          shape_to_string(params[k].shape()) + " but its moments hold " +
                          std::to_string(state.first_moment[k].size()) + " entries");
    }
  }
  const AdamConfig& cfg = state.config;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto value = params[k].mutable_values();
    const auto grad = params[k].grad();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      m[i] = static_cast<Real>(mi);
      v[i] = static_cast<Real>(vi);
      const double m_hat = mi / correction1;
      const double v_hat = vi / correction2;
      value[i] = static_cast<Real>(value[i] - cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(std::span<Tensor<float>>, AdamState<float>&);
template void adam_step<double>(std::span<Tensor<double>>, AdamState<double>&);

}  // namespace hrgc
