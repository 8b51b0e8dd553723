// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>

#include "doctest.h"
#include "polyflex/lbfgs.hpp"

using namespace polyflex;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("scalar quadratic with a lower bound") {
  const Objective f = [](std::span<const double> x, std::span<double> g) {
    if (!g.empty()) g[0] = 2.0 * (x[0] - 1.0);
    return (x[0] - 1.0) * (x[0] - 1.0);
  };
  const std::vector<double> x0 = {-3.0};
  const std::vector<double> lo = {0.0};
  const OptimizeResult r = optimize(f, x0, lo, {});
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("active upper bound pins the solution") {
  // minimum of (w-1)^2 over [0, 0.5] sits on the upper bound
  const Objective f = [](std::span<const double> x, std::span<double> g) {
    if (!g.empty()) g[0] = 2.0 * (x[0] - 1.0);
    return (x[0] - 1.0) * (x[0] - 1.0);
  };
  const std::vector<double> x0 = {0.1};
  const std::vector<double> lo = {0.0};
  const std::vector<double> hi = {0.5};
  const OptimizeResult r = optimize(f, x0, lo, hi, {});
  CHECK(r.x[0] == doctest::Approx(0.5));
  CHECK(r.converged);
}

TEST_CASE("rosenbrock from the standard start") {
  const Objective f = [](std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    if (!g.empty()) {
      g[0] = -2.0 * a - 400.0 * x[0] * b;
      g[1] = 200.0 * b;
    }
    return a * a + 100.0 * b * b;
  };
  const std::vector<double> x0 = {-1.2, 1.0};
  const std::vector<double> lo = {-kInf, -kInf};
  OptimizeConfig cfg;
  cfg.max_iter = 200;
  const OptimizeResult r = optimize(f, x0, lo, cfg);
  CHECK(r.iterations <= 200);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("projected minimum of a bounded convex quadratic is stationary") {
  // f(x) = sum (x_i - c_i)^2 with some c_i below the bound
  const std::vector<double> c = {1.5, -2.0, 0.7, -0.1, 0.5};
  const Objective f = [&c](std::span<const double> x, std::span<double> g) {
    double v = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - c[i];
      if (!g.empty()) g[i] = 2.0 * d;
      v += d * d;
    }
    return v;
  };
  const std::vector<double> x0 = {5, 5, 5, 5, 5};
  const std::vector<double> lo = {0, 0, 0, -kInf, 1.0};
  const OptimizeResult r = optimize(f, x0, lo, {});
  CHECK(r.converged);
  // bounds respected exactly
  for (std::size_t i = 0; i < 5; ++i) CHECK(r.x[i] >= lo[i]);
  // active where c is infeasible, stationary elsewhere
  CHECK(r.x[1] == 0.0);
  std::vector<double> g(5);
  f(r.x, g);
  for (const std::size_t i : {0UL, 2UL, 3UL}) CHECK(std::abs(g[i]) <= 1e-8);
  CHECK(r.x[4] == 1.0);
}

TEST_CASE("objective decreases monotonically over accepted iterates") {
  const Objective f = [](std::span<const double> x, std::span<double> g) {
    const double v = std::pow(x[0] - 2.0, 4.0) + std::pow(x[1] + 1.0, 2.0) +
                     0.5 * std::sin(3.0 * x[0]) * std::sin(3.0 * x[0]);
    if (!g.empty()) {
      g[0] = 4.0 * std::pow(x[0] - 2.0, 3.0) + 1.5 * std::sin(3.0 * x[0]) * std::cos(3.0 * x[0]) * 2.0;
      g[1] = 2.0 * (x[1] + 1.0);
    }
    return v;
  };
  std::vector<double> accepted;
  OptimizeConfig cfg;
  cfg.on_iterate = [&accepted](int, double v) { accepted.push_back(v); };
  const std::vector<double> x0 = {0.0, 0.0};
  const std::vector<double> lo = {-kInf, -kInf};
  optimize(f, x0, lo, cfg);
  CHECK(accepted.size() > 3);
  for (std::size_t i = 1; i < accepted.size(); ++i) CHECK(accepted[i] <= accepted[i - 1] + 1e-15);
}

TEST_CASE("max_iter stop reports not converged") {
  const Objective f = [](std::span<const double> x, std::span<double> g) {
    if (!g.empty()) g[0] = 2.0 * x[0];
    return x[0] * x[0];
  };
  OptimizeConfig cfg;
  cfg.max_iter = 1;
  cfg.grad_tol = 0.0;
  cfg.f_tol = 0.0;
  const OptimizeResult r = optimize(f, std::vector<double>{10.0}, std::vector<double>{-kInf}, cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.reason == StopReason::MaxIter);
}
