#ifndef PROBEKIT_MATRIX_H_
#define PROBEKIT_MATRIX_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace probekit {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(size_t rows, size_t cols, std::vector<double> data);

  static Matrix RowVector(std::span<const double> values);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  // Rows [begin, end) as one contiguous block.
  std::span<const double> rows_block(size_t begin, size_t end) const {
    return {data_.data() + begin * cols_, (end - begin) * cols_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void Fill(double v);
  bool AllFinite() const;

  bool SameShape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool operator==(const Matrix& other) const = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

std::string ShapeString(const Matrix& m);

// Rows [begin, end) copied into a new matrix.
Matrix SliceRows(const Matrix& m, size_t begin, size_t end);

// Trainable tensor with its gradient accumulator.
struct Parameter {
  Parameter() = default;
  Parameter(std::string n, size_t rows, size_t cols)
      : name(std::move(n)), value(rows, cols), grad(rows, cols) {}

  std::string name;
  Matrix value;
  Matrix grad;

  void ZeroGrad() { grad.Fill(0.0); }
};

// Non-owning list of the parameters an optimizer or checker walks over.
using ParamRefs = std::vector<Parameter*>;

}  // namespace probekit

#endif  // PROBEKIT_MATRIX_H_
