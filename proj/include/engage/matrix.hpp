#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace engage {

// Dense row-major matrix. Small helper, not a linear algebra library.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(size_t r, size_t c) {
    assert(r < rows && c < cols);
    return data[r * cols + c];
  }
  double at(size_t r, size_t c) const {
    assert(r < rows && c < cols);
    return data[r * cols + c];
  }
  std::span<const double> row(size_t r) const {
    return {data.data() + r * cols, cols};
  }
  std::span<double> row(size_t r) {
    return {data.data() + r * cols, cols};
  }

  std::vector<double> column(size_t c) const {
    std::vector<double> out(rows);
    for (size_t r = 0; r < rows; ++r) out[r] = at(r, c);
    return out;
  }

  // Copy of selected columns, in the given order.
  Matrix select_columns(std::span<const size_t> idx) const {
    Matrix out(rows, idx.size());
    for (size_t r = 0; r < rows; ++r)
      for (size_t j = 0; j < idx.size(); ++j) out.at(r, j) = at(r, idx[j]);
    return out;
  }

  // Copy of selected rows, in the given order.
  Matrix select_rows(std::span<const size_t> idx) const {
    Matrix out(idx.size(), cols);
    for (size_t i = 0; i < idx.size(); ++i)
      for (size_t c = 0; c < cols; ++c) out.at(i, c) = at(idx[i], c);
    return out;
  }
};

}  // namespace engage
