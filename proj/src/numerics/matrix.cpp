#include "hrgc/numerics/matrix.hpp"

#include <string>

#include "hrgc/errors.hpp"

namespace hrgc {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw ShapeError("Matrix: " + std::to_string(values_.size()) + " values for shape [" +
                     std::to_string(rows_) + "x" + std::to_string(cols_) + "]");
  }
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::set_column(std::size_t c, std::span<const double> values) {
  if (values.size() != rows_) {
    throw ShapeError("Matrix::set_column: expected " + std::to_string(rows_) + " values, got " +
                     std::to_string(values.size()));
  }
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
}

Matrix Matrix::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows_) throw ShapeError("Matrix::slice_rows: range out of bounds");
  return Matrix(end - begin, cols_,
                std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(begin * cols_),
                                    values_.begin() + static_cast<std::ptrdiff_t>(end * cols_)));
}

Matrix Matrix::slice_cols(std::size_t begin, std::size_t end) const {
  if (begin > end || end > cols_) throw ShapeError("Matrix::slice_cols: range out of bounds");
  Matrix out(rows_, end - begin);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = (*this)(r, c);
  }
  return out;
}

}  // namespace hrgc
