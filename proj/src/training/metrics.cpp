#include "hrgc/training/metrics.hpp"

#include <cmath>
#include <string>

#include "hrgc/errors.hpp"

namespace hrgc {

namespace {

void check(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.empty() || a.size() != b.size()) {
    throw ContractError(std::string(what) + ": need equal non-empty lengths, got " + std::to_string(a.size()) +
                        " and " + std::to_string(b.size()));
  }
}

}  // namespace

double rmse(std::span<const double> prediction, std::span<const double> truth) {
  check(prediction, truth, "rmse");
  ErrorAccumulator acc;
  acc.add(prediction, truth);
  return acc.rmse();
}

double mae(std::span<const double> prediction, std::span<const double> truth) {
  check(prediction, truth, "mae");
  ErrorAccumulator acc;
  acc.add(prediction, truth);
  return acc.mae();
}

void ErrorAccumulator::add(std::span<const double> prediction, std::span<const double> truth) {
  check(prediction, truth, "metrics");
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = prediction[i] - truth[i];
    squared += d * d;
    absolute += std::abs(d);
  }
  count += prediction.size();
}

void ErrorAccumulator::merge(const ErrorAccumulator& other) {
  squared += other.squared;
  absolute += other.absolute;
  count += other.count;
}

double ErrorAccumulator::rmse() const {
  if (count == 0) throw ContractError("rmse: no values");
  return std::sqrt(squared / static_cast<double>(count));
}

double ErrorAccumulator::mae() const {
  if (count == 0) throw ContractError("mae: no values");
  return absolute / static_cast<double>(count);
}

}  // namespace hrgc
