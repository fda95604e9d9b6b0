#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace polyglot {

using Vector = std::vector<double>;

// Dense row-major matrix of 64-bit reals. The flattened view satisfies
// flat()[i * cols + j] == (*this)(i, j).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  const double* row(std::size_t i) const { return data_.data() + i * cols_; }
  double* row(std::size_t i) { return data_.data() + i * cols_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// W x + b; rejects shape disagreement.
Vector affine(const Matrix& w, const Vector& x, const Vector& b);
// W x
Vector matvec(const Matrix& w, const Vector& x);
// W x + U h + b in a single accumulation pass per row (matches Tape::gate).
Vector affine2(const Matrix& w, const Vector& x, const Matrix& u, const Vector& h,
               const Vector& b);

// Max-subtracted softmax; output sums to 1 within 1e-12. Rejects empty input.
Vector softmax(const Vector& z);
double log_sum_exp(const Vector& z);

// M[i][j] = u[i] * v[j]; rejects empty operands.
Matrix outer(const Vector& u, const Vector& v);

Vector add(const Vector& a, const Vector& b);
Vector hadamard(const Vector& a, const Vector& b);
Vector tanh_vec(const Vector& a);
Vector sigmoid_vec(const Vector& a);

double sigmoid(double x);

}  // namespace polyglot
