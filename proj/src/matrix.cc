#include "probekit/matrix.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace probekit {

Matrix::Matrix(size_t rows, size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("matrix data length does not match shape");
  }
}

Matrix Matrix::RowVector(std::span<const double> values) {
  return Matrix(1, values.size(),
                std::vector<double>(values.begin(), values.end()));
}

void Matrix::Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string ShapeString(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "," + std::to_string(m.cols()) + ")";
}

Matrix SliceRows(const Matrix& m, size_t begin, size_t end) {
  auto block = m.rows_block(begin, end);
  return Matrix(end - begin, m.cols(),
                std::vector<double>(block.begin(), block.end()));
}

}  // namespace probekit
