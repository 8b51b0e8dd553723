// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "polyflex/icnn.hpp"
#include "polyflex/tape.hpp"

using namespace polyflex;

TEST_CASE("tape adjoints of a small expression") {
  // f(x, y) = x*y + softplus(x) - 2y
  Tape t;
  const auto x = t.input(0.7);
  const auto y = t.input(-1.3);
  const auto f = t.add(t.sub(t.mul(x, y), t.mul_const(y, 2.0)), t.softplus_node(x));
  t.backward(f);
  CHECK(t.val(f) == doctest::Approx(0.7 * -1.3 + std::log1p(std::exp(0.7)) + 2.6));
  CHECK(t.adjoint(x) == doctest::Approx(-1.3 + sigmoid(0.7)).epsilon(1e-14));
  CHECK(t.adjoint(y) == doctest::Approx(0.7 - 2.0).epsilon(1e-14));
}

TEST_CASE("tape sigmoid and square derivatives match finite differences") {
  const double x0 = 0.37;
  const double h = 1e-7;
  auto eval = [](double v) {
    Tape t;
    const auto x = t.input(v);
    const auto f = t.square(t.sigmoid_node(x));
    return t.val(f);
  };
  Tape t;
  const auto x = t.input(x0);
  const auto f = t.square(t.sigmoid_node(x));
  t.backward(f);
  const double fd = (eval(x0 + h) - eval(x0 - h)) / (2.0 * h);
  CHECK(t.adjoint(x) == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("tape reuse after clear") {
  Tape t;
  const auto a = t.input(2.0);
  t.backward(t.mul(a, a));
  CHECK(t.adjoint(a) == 4.0);
  t.clear();
  const auto b = t.input(3.0);
  const auto g = t.mul_const(b, 5.0);
  t.backward(g);
  CHECK(t.adjoint(b) == 5.0);
}
