#include "hrgc/layers/common.hpp"

#include <cmath>

#include "hrgc/numerics/ops.hpp"

namespace hrgc {

template <typename Real>
Tensor<Real> glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<Real> values(rows * cols);
  for (Real& v : values) v = static_cast<Real>(rng.uniform(-limit, limit));
  return Tensor<Real>::from_values({rows, cols}, std::move(values), true);
}

template <typename Real>
Tensor<Real> constant_parameter(std::size_t n, Real value) {
  return Tensor<Real>::full({n}, value, true);
}

template <typename Real>
Linear<Real> Linear<Real>::init(std::size_t in, std::size_t out, Rng& rng) {
  return Linear{glorot_uniform<Real>(in, out, rng), constant_parameter<Real>(out, Real(0))};
}

template <typename Real>
Tensor<Real> Linear<Real>::apply(const Tensor<Real>& x) const {
  return add_row_broadcast(matmul(x, weight), bias);
}

template <typename Real>
void Linear<Real>::collect(ParameterList<Real>& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

template Tensor<float> glorot_uniform<float>(std::size_t, std::size_t, Rng&);
template Tensor<double> glorot_uniform<double>(std::size_t, std::size_t, Rng&);
template Tensor<float> constant_parameter<float>(std::size_t, float);
template Tensor<double> constant_parameter<double>(std::size_t, double);
template struct Linear<float>;
template struct Linear<double>;

}  // namespace hrgc
