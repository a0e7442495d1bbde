#pragma once

#include <cstddef>
#include <span>

namespace hrgc {

// Root-mean-square per-position error. ContractError on empty or unequal
// inputs.
double rmse(std::span<const double> prediction, std::span<const double> truth);

// Mean absolute per-position error; never exceeds rmse on the same inputs.
double mae(std::span<const double> prediction, std::span<const double> truth);

// Running sums for metrics pooled over many sequences.
struct ErrorAccumulator {
  double squared = 0.0;
  double absolute = 0.0;
  std::size_t count = 0;

  void add(std::span<const double> prediction, std::span<const double> truth);
  void merge(const ErrorAccumulator& other);
  double rmse() const;
  double mae() const;
};

}  // namespace hrgc
