#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "hrgc/numerics/ops.hpp"
#include "hrgc/numerics/random.hpp"
#include "hrgc/numerics/tensor.hpp"

namespace hrgc::test {

struct FdReport {
  double max_rel_error = 0.0;
  std::string worst;  // "<param>[<index>]"
  std::size_t checked = 0;
};

struct FdParam {
  std::string name;
  Tensor<double> tensor;
};

// Reduces an op output to a scalar with fixed pseudo-random weights, so every
// output entry contributes a distinct amount to the checked gradient.
inline Tensor<double> weighted_sum(const Tensor<double>& out, std::uint64_t seed = 99) {
  Rng rng(seed);
  std::vector<double> w(out.numel());
  for (double& x : w) x = rng.uniform(-1.0, 1.0);
  return sum(mul(out, Tensor<double>::from_values(out.shape(), std::move(w))));
}

/// Central differences against reverse mode. The relative error of one entry
/// is |a - n| / max(|a|, |n|, floor); the floor keeps gradients that are
/// zero up to rounding from dividing by nothing.
inline FdReport check_gradients(const std::vector<FdParam>& params, const std::function<Tensor<double>()>& loss_fn,
                                double h = 1e-5, double floor = 1e-6) {
  for (const FdParam& p : params) {
    Tensor<double> t = p.tensor;
    t.zero_grad();
  }
  backward(loss_fn());
  FdReport report;
  for (const FdParam& p : params) {
    Tensor<double> t = p.tensor;
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    auto values = t.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      double plus = 0.0;
      double minus = 0.0;
      {
        NoGradGuard guard;
        values[i] = saved + h;
        plus = loss_fn().item();
        values[i] = saved - h;
        minus = loss_fn().item();
      }
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
      const double rel = std::abs(analytic[i] - numeric) / denom;
      ++report.checked;
      if (rel >= report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

}  // namespace hrgc::test
