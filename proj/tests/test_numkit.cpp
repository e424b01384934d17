#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "limopt/errors.hpp"
#include "limopt/gradcheck.hpp"
#include "limopt/rng.hpp"
#include "limopt/vec.hpp"

using namespace limopt;

TEST_CASE("dot") {
  CHECK(dot({1, 2}, {3, 4}) == 11.0);
  CHECK(dot({5, -2, 7}, {0, 0, 0}) == 0.0);
  CHECK_THROWS_AS(dot({1, 2}, {1}), std::invalid_argument);

  RngStream rng(123, 0);
  const ParamVector v = gaussian_vector(rng, 17, 2.0);
  const double n = norm2(v);
  CHECK(dot(v, v) == doctest::Approx(n * n).epsilon(1e-12));

  const ParamVector w = gaussian_vector(rng, 17, 1.0);
  CHECK(dot(v, w) == dot(w, v));  // exact: same accumulation order
}

TEST_CASE("norm2") {
  CHECK(norm2({3, 4}) == 5.0);
  CHECK(norm2({0, 0, 0}) == 0.0);
  for (size_t d : {1u, 5u, 31u}) {
    ParamVector e(d, 0.0);
    e[d / 2] = 1.0;
    CHECK(norm2(e) == 1.0);
  }
}

TEST_CASE("axpy") {
  const ParamVector x{1, -2, 3};
  const ParamVector y{4, 5, 6};
  CHECK(axpy(0.0, x, y) == y);
  CHECK(axpy(1.0, x, ParamVector(3, 0.0)) == x);
  const ParamVector z = axpy(-1.0, x, x);
  CHECK(norm2(z) == 0.0);
  CHECK_THROWS_AS(axpy(1.0, x, {1, 2}), std::invalid_argument);
}

TEST_CASE("gaussian_vector basics") {
  RngStream rng(7, 3);
  const ParamVector z = gaussian_vector(rng, 4, 0.0);
  CHECK(z == ParamVector(4, 0.0));

  RngStream a(42, 5), b(42, 5);
  CHECK(gaussian_vector(a, 3, 1.0) == gaussian_vector(b, 3, 1.0));

  RngStream c(42, 6);
  CHECK(gaussian_vector(c, 3, 1.0) != gaussian_vector(b, 3, 1.0));

  CHECK_THROWS_AS(gaussian_vector(a, 3, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_vector(a, 0, 1.0), std::invalid_argument);
}

TEST_CASE("gaussian_vector second moment") {
  RngStream rng(2024, 0);
  const ParamVector v = gaussian_vector(rng, 100000, 1.0);
  double acc = 0.0;
  for (double x : v) acc += x * x;
  acc /= static_cast<double>(v.size());
  CHECK(acc > 0.99);
  CHECK(acc < 1.01);
}

TEST_CASE("rng stream determinism is independent of other streams") {
  RngStream lone(99, 4);
  const double expected = lone.next_gaussian();

  RngStream other1(99, 0), other2(99, 1);
  (void)other1.next_u64();
  (void)other2.next_gaussian();
  RngStream again(99, 4);
  CHECK(again.next_gaussian() == expected);
}

TEST_CASE("finite_diff_gradient") {
  auto half_sq = [](const ParamVector& x) { return 0.5 * dot(x, x); };
  const ParamVector x{1.5, -2.0, 0.25};
  const ParamVector g = finite_diff_gradient(half_sq, x, 1e-5);
  CHECK(max_relative_error(g, x) < 1e-9);

  auto constant = [](const ParamVector&) { return 3.0; };
  const ParamVector gz = finite_diff_gradient(constant, x, 1e-5);
  CHECK(norm2(gz) < 1e-12);

  CHECK_THROWS_AS(finite_diff_gradient(half_sq, x, 0.0), std::invalid_argument);
  auto bad = [](const ParamVector& v) { return std::log(v[0] - 100.0); };
  CHECK_THROWS_AS(finite_diff_gradient(bad, x, 1e-5), NumericError);
}

TEST_CASE("finite differences are near-exact on quadratics") {
  // f(x) = c + b'x + x'Ax/2 with a fixed small A; analytic gradient b + Ax
  const double A[3][3] = {{2.0, 0.5, -1.0}, {0.5, 1.0, 0.25}, {-1.0, 0.25, 3.0}};
  const ParamVector b{1.0, -4.0, 2.5};
  auto f = [&](const ParamVector& x) {
    double acc = 7.0 + dot(b, x);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) acc += 0.5 * x[i] * A[i][j] * x[j];
    return acc;
  };
  RngStream rng(55, 0);
  for (int trial = 0; trial < 5; ++trial) {
    ParamVector x(3);
    for (double& xi : x) xi = 20.0 * rng.next_double() - 10.0;
    ParamVector expect(3, 0.0);
    for (int i = 0; i < 3; ++i) {
      expect[i] = b[i];
      for (int j = 0; j < 3; ++j) expect[i] += A[i][j] * x[j];
    }
    const ParamVector g = finite_diff_gradient(f, x, 1e-4);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(g[i] - expect[i]) <= 1e-9);
  }
}
