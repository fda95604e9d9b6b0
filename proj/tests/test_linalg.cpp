#include <stdexcept>
#include <cmath>

#include "doctest.h"
#include "polyglot/linalg.hpp"
#include "polyglot/rng.hpp"

using namespace polyglot;

TEST_CASE("affine identity passes input through") {
  Matrix w(2, 2);
  w(0, 0) = 1.0;
  w(1, 1) = 1.0;
  const Vector y = affine(w, {3.0, -1.0}, {0.0, 0.0});
  CHECK(y == Vector{3.0, -1.0});
}

TEST_CASE("affine with zero weights returns the bias") {
  const Matrix w(2, 2, 0.0);
  const Vector y = affine(w, {5.0, 7.0}, {1.0, 2.0});
  CHECK(y == Vector{1.0, 2.0});
}

TEST_CASE("affine matches a hand computation") {
  Matrix w(2, 2);
  w(0, 0) = 1.0;
  w(0, 1) = 2.0;
  w(1, 0) = 3.0;
  w(1, 1) = 4.0;
  const Vector y = affine(w, {1.0, 1.0}, {1.0, 0.0});
  CHECK(y == Vector{4.0, 7.0});
}

TEST_CASE("affine rejects shape mismatches with a shape-describing error") {
  const Matrix w(3, 4);
  CHECK_THROWS_WITH_AS(affine(w, Vector(5, 0.0), Vector(3, 0.0)),
                       doctest::Contains("3x4"), std::invalid_argument);
  CHECK_THROWS_AS(affine(w, Vector(4, 0.0), Vector(2, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(matvec(w, Vector(3, 0.0)), std::invalid_argument);
}

TEST_CASE("softmax of equal logits is uniform") {
  const Vector p = softmax({0.0, 0.0, 0.0});
  for (const double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("softmax matches the analytic (ln 2, 0, 0) case") {
  const Vector p = softmax({std::log(2.0), 0.0, 0.0});
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(p[2] == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("softmax rejects empty input") {
  CHECK_THROWS_AS(softmax({}), std::invalid_argument);
  CHECK_THROWS_AS(log_sum_exp({}), std::invalid_argument);
}

TEST_CASE("softmax is shift invariant and sums to one") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Vector z(5);
    for (double& v : z) v = rng.uniform(-10.0, 10.0);
    const Vector p = softmax(z);
    double total = 0.0;
    for (const double v : p) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);

    const double shift = rng.uniform(-100.0, 100.0);
    Vector zs = z;
    for (double& v : zs) v += shift;
    const Vector ps = softmax(zs);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(ps[i] == doctest::Approx(p[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("softmax survives large logits") {
  const Vector p = softmax({1000.0, 1000.0});
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(log_sum_exp({1000.0, 1000.0}) == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("outer product hand examples") {
  const Matrix m = outer({1.0, 2.0}, {3.0, 4.0});
  CHECK(m(0, 0) == 3.0);
  CHECK(m(0, 1) == 4.0);
  CHECK(m(1, 0) == 6.0);
  CHECK(m(1, 1) == 8.0);

  const Matrix z = outer({0.0, 0.0}, {3.0, 4.0});
  for (const double v : z.flat()) CHECK(v == 0.0);

  const Matrix e = outer({0.0, 1.0, 0.0}, {0.0, 0.0, 1.0});
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(e(i, j) == ((i == 1 && j == 2) ? 1.0 : 0.0));
    }
  }

  CHECK_THROWS_AS(outer({}, {1.0}), std::invalid_argument);
}

TEST_CASE("vec of an outer product is row-major") {
  Rng rng(11);
  Vector u(3), v(4);
  for (double& x : u) x = rng.uniform(-2.0, 2.0);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  const Matrix m = outer(u, v);
  CHECK(m.flat().size() == u.size() * v.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) {
      CHECK(m.flat()[i * v.size() + j] == u[i] * v[j]);
    }
  }
}

TEST_CASE("operations stay finite on bounded inputs") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix w(4, 6);
    for (double& v : w.flat()) v = rng.uniform(-50.0, 50.0);
    Vector x(6), b(4);
    for (double& v : x) v = rng.uniform(-50.0, 50.0);
    for (double& v : b) v = rng.uniform(-50.0, 50.0);
    for (const double v : affine(w, x, b)) CHECK(std::isfinite(v));
    for (const double v : softmax(x)) CHECK(std::isfinite(v));
    for (const double v : sigmoid_vec(x)) CHECK(std::isfinite(v));
    for (const double v : tanh_vec(x)) CHECK(std::isfinite(v));
  }
}
