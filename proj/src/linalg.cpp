#include "polyglot/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace polyglot {

namespace {

[[noreturn]] void shape_error(const std::string& what) {
  throw std::invalid_argument(what);
}

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Vector affine(const Matrix& w, const Vector& x, const Vector& b) {
  if (w.cols() != x.size() || w.rows() != b.size()) {
    shape_error("affine: W is " + dims(w) + " but x has length " + std::to_string(x.size()) +
                " and b has length " + std::to_string(b.size()));
  }
  Vector y(w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double* wr = w.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) acc += wr[j] * x[j];
    y[i] = acc + b[i];
  }
  return y;
}

Vector matvec(const Matrix& w, const Vector& x) {
  if (w.cols() != x.size()) {
    shape_error("matvec: W is " + dims(w) + " but x has length " + std::to_string(x.size()));
  }
  Vector y(w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double* wr = w.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) acc += wr[j] * x[j];
    y[i] = acc;
  }
  return y;
}

Vector affine2(const Matrix& w, const Vector& x, const Matrix& u, const Vector& h,
               const Vector& b) {
  if (w.cols() != x.size() || u.cols() != h.size() || w.rows() != u.rows() ||
      w.rows() != b.size()) {
    shape_error("affine2: W is " + dims(w) + ", U is " + dims(u) + ", x/h/b have lengths " +
                std::to_string(x.size()) + "/" + std::to_string(h.size()) + "/" +
                std::to_string(b.size()));
  }
  Vector y(w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double* wr = w.row(i);
    const double* ur = u.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) acc += wr[j] * x[j];
    for (std::size_t j = 0; j < u.cols(); ++j) acc += ur[j] * h[j];
    y[i] = acc + b[i];
  }
  return y;
}

Vector softmax(const Vector& z) {
  if (z.empty()) shape_error("softmax: empty input");
  const double m = *std::max_element(z.begin(), z.end());
  Vector p(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - m);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

double log_sum_exp(const Vector& z) {
  if (z.empty()) shape_error("log_sum_exp: empty input");
  const double m = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (const double v : z) total += std::exp(v - m);
  return m + std::log(total);
}

Matrix outer(const Vector& u, const Vector& v) {
  if (u.empty() || v.empty()) shape_error("outer: empty operand");
  Matrix m(u.size(), v.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    double* r = m.row(i);
    for (std::size_t j = 0; j < v.size(); ++j) r[j] = u[i] * v[j];
  }
  return m;
}

Vector add(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    shape_error("add: lengths " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  Vector y(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
  return y;
}

Vector hadamard(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    shape_error("hadamard: lengths " + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()));
  }
  Vector y(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] * b[i];
  return y;
}

Vector tanh_vec(const Vector& a) {
  Vector y(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = std::tanh(a[i]);
  return y;
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector sigmoid_vec(const Vector& a) {
  Vector y(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = sigmoid(a[i]);
  return y;
}

}  // namespace polyglot
