// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "polyflex/errors.hpp"
#include "polyflex/icnn.hpp"
#include "polyflex/rng.hpp"

using namespace polyflex;

TEST_CASE("architecture spec parse/print round trip") {
  const ArchitectureSpec a = ArchitectureSpec::parse("6-8-4-1");
  CHECK(a.input_size == 6);
  CHECK(a.hidden == std::vector<int>{8, 4});
  CHECK(a.str() == "6-8-4-1");
  CHECK(ArchitectureSpec::parse("2-1").hidden.empty());
  CHECK_THROWS_AS(ArchitectureSpec::parse("6-8-2"), Error);
  CHECK_THROWS_AS(ArchitectureSpec::parse("6--1"), Error);
  CHECK_THROWS_AS(ArchitectureSpec::parse("x-1"), Error);
}

TEST_CASE("forward: single linear layer passes through") {
  ICNNParams p = make_params(ArchitectureSpec::parse("2-1"), false, false);
  p.wx[0](0, 0) = 1.0;
  p.wx[0](0, 1) = 0.0;
  const std::vector<double> x = {0.7, 2.0};
  CHECK(forward(p, x) == doctest::Approx(0.7));
  CHECK(input_gradient(p, x)[0] == doctest::Approx(1.0));
  CHECK(input_gradient(p, x)[1] == doctest::Approx(0.0));
}

TEST_CASE("forward: one softplus neuron at zero gives ln 2") {
  ICNNParams p = make_params(ArchitectureSpec::parse("2-1-1"), false, false);
  p.wz[1](0, 0) = 1.0;
  const std::vector<double> x = {0.3, -0.4};
  CHECK(forward(p, x) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("softplus overflow guard") {
  CHECK(softplus(1000.0) == 1000.0);
  CHECK(softplus(31.0) == doctest::Approx(31.0).epsilon(1e-13));
  CHECK(softplus(-745.0) == doctest::Approx(std::exp(-745.0)));
  CHECK(std::isfinite(softplus(-1e6)));
}

TEST_CASE("input gradient of a softplus dot product") {
  ICNNParams p = make_params(ArchitectureSpec::parse("2-1-1"), false, false);
  p.wx[0](0, 0) = 1.0;
  p.wx[0](0, 1) = 1.0;
  p.wz[1](0, 0) = 1.0;
  const std::vector<double> x = {0.0, 0.0};
  const auto g = input_gradient(p, x);
  CHECK(g[0] == doctest::Approx(0.5));
  CHECK(g[1] == doctest::Approx(0.5));
}

TEST_CASE("forward shape mismatch") {
  ICNNParams p = make_params(ArchitectureSpec::parse("3-4-1"), false, false);
  CHECK_THROWS_AS(forward(p, std::vector<double>{1.0, 2.0}), ShapeMismatch);
}

TEST_CASE("input gradient matches central finite differences") {
  Rng rng(5);
  for (int inst = 0; inst < 20; ++inst) {
    ICNNParams p = init_params(ArchitectureSpec::parse("5-8-4-1"), inst % 2 == 0, false,
                               {}, 100 + static_cast<std::uint64_t>(inst));
    std::vector<double> x(5);
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    const auto g = input_gradient(p, x);
    const double h = 1e-6;
    for (int j = 0; j < 5; ++j) {
      auto xp = x, xm = x;
      xp[static_cast<std::size_t>(j)] += h;
      xm[static_cast<std::size_t>(j)] -= h;
      const double fd = (forward(p, xp) - forward(p, xm)) / (2.0 * h);
      CHECK(g[static_cast<std::size_t>(j)] ==
            doctest::Approx(fd).epsilon(1e-7).scale(std::max(1.0, std::abs(fd))));
    }
  }
}

TEST_CASE("midpoint convexity of constraint-satisfying networks") {
  Rng rng(6);
  for (int inst = 0; inst < 5; ++inst) {
    const ICNNParams p = init_params(ArchitectureSpec::parse("4-8-4-1"), false, false, {},
                                     200 + static_cast<std::uint64_t>(inst));
    for (int it = 0; it < 1000; ++it) {
      std::vector<double> x(4), y(4), mid(4);
      for (int j = 0; j < 4; ++j) {
        x[static_cast<std::size_t>(j)] = rng.uniform(-3.0, 3.0);
        y[static_cast<std::size_t>(j)] = rng.uniform(-3.0, 3.0);
      }
      const double t = rng.next_double();
      for (int j = 0; j < 4; ++j)
        mid[static_cast<std::size_t>(j)] = t * x[static_cast<std::size_t>(j)] + (1.0 - t) * y[static_cast<std::size_t>(j)];
      CHECK(forward(p, mid) <= t * forward(p, x) + (1.0 - t) * forward(p, y) + 1e-10);
    }
  }
}

TEST_CASE("monotone variant has non-negative input gradients") {
  Rng rng(8);
  const ICNNParams p = init_params(ArchitectureSpec::parse("4-8-4-1"), true, false, {}, 301);
  for (int it = 0; it < 1000; ++it) {
    std::vector<double> x(4);
    for (double& v : x) v = rng.uniform(-3.0, 3.0);
    for (double gj : input_gradient(p, x)) CHECK(gj >= -1e-10);
  }
}

TEST_CASE("project clamps constrained entries and is idempotent") {
  ICNNParams p = make_params(ArchitectureSpec::parse("2-2-1"), true, false);
  p.wz[1](0, 0) = -0.3;
  p.wx[0](1, 0) = -1.0;
  p.b[0][0] = -0.7;
  project(p);
  CHECK(p.wz[1](0, 0) == 0.0);
  CHECK(p.wx[0](1, 0) == 0.0);
  CHECK(p.b[0][0] == -0.7);  // biases unconstrained
  const ICNNParams snapshot = p;
  project(p);
  CHECK(p.wx[0].v == snapshot.wx[0].v);
  CHECK(p.wz[1].v == snapshot.wz[1].v);
}

TEST_CASE("project respects free columns") {
  ICNNParams p = make_params(ArchitectureSpec::parse("3-2-1"), true, false, {0, 0, 1});
  p.wx[0](0, 2) = -0.5;
  p.wx[0](0, 1) = -0.5;
  project(p);
  CHECK(p.wx[0](0, 2) == -0.5);  // determinant column stays signed
  CHECK(p.wx[0](0, 1) == 0.0);
}

TEST_CASE("init determinism and constraints") {
  const ArchitectureSpec arch = ArchitectureSpec::parse("6-8-4-1");
  const ICNNParams a = init_params(arch, true, true, {}, 42);
  const ICNNParams b = init_params(arch, true, true, {}, 42);
  CHECK(a.wx[0].v == b.wx[0].v);
  CHECK(a.wz[1].v == b.wz[1].v);
  CHECK(a.b[2] == b.b[2]);

  for (const Mat& m : a.wx)
    for (double v : m.v) CHECK(v >= 0.0);
  for (double v : a.wx.back().v) CHECK(v == 0.0);  // zero_last_wx

  // thirty seeds, thirty distinct parameter sets
  std::vector<std::vector<double>> seen;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const ICNNParams p = init_params(arch, false, false, {}, s);
    for (const auto& prev : seen) CHECK(prev != p.wx[0].v);
    seen.push_back(p.wx[0].v);
  }
}

TEST_CASE("param vector round trip is lossless") {
  const ArchitectureSpec arch = ArchitectureSpec::parse("6-8-4-1");
  const ICNNParams p = init_params(arch, false, true, {}, 9001);
  const ParamVector pv = to_param_vector(p);
  CHECK(static_cast<int>(pv.value.size()) == param_count(p));

  ICNNParams q = make_params(arch, false, true);
  from_param_vector(q, pv.value);
  for (std::size_t i = 0; i < p.wx.size(); ++i) CHECK(p.wx[i].v == q.wx[i].v);
  for (std::size_t i = 1; i < p.wz.size(); ++i) CHECK(p.wz[i].v == q.wz[i].v);
  for (std::size_t i = 0; i < p.b.size(); ++i) CHECK(p.b[i] == q.b[i]);

  // wz bounded below by zero, biases unbounded
  const ICNNParams c = init_params(arch, true, false, {}, 1);
  const ParamVector pvc = to_param_vector(c);
  int zeros = 0, infs = 0;
  for (double lo : pvc.lower) {
    if (lo == 0.0) ++zeros;
    if (std::isinf(lo)) ++infs;
  }
  CHECK(zeros > 0);
  CHECK(infs > 0);
}
