// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace polyflex {

/// 3x3 real matrix, row-major. Holds deformation gradients F (dimensionless)
/// and first Piola--Kirchhoff stresses P (MPa).
struct Tensor3 {
  std::array<double, 9> e{};

  double& operator()(int i, int j) { return e[static_cast<std::size_t>(3 * i + j)]; }
  double operator()(int i, int j) const { return e[static_cast<std::size_t>(3 * i + j)]; }

  static Tensor3 identity() { return Tensor3{{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }
  static Tensor3 zero() { return Tensor3{}; }
  static Tensor3 diag(double a, double b, double c) { return Tensor3{{a, 0, 0, 0, b, 0, 0, 0, c}}; }

  bool all_finite() const {
    for (double v : e)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool is_diagonal(double tol = 0.0) const {
    return std::abs(e[1]) <= tol && std::abs(e[2]) <= tol && std::abs(e[3]) <= tol &&
           std::abs(e[5]) <= tol && std::abs(e[6]) <= tol && std::abs(e[7]) <= tol;
  }

  Tensor3 transposed() const {
    return Tensor3{{e[0], e[3], e[6], e[1], e[4], e[7], e[2], e[5], e[8]}};
  }

  Tensor3 operator+(const Tensor3& o) const {
    Tensor3 r;
    for (int i = 0; i < 9; ++i) r.e[static_cast<std::size_t>(i)] = e[static_cast<std::size_t>(i)] + o.e[static_cast<std::size_t>(i)];
    return r;
  }
  Tensor3 operator-(const Tensor3& o) const {
    Tensor3 r;
    for (int i = 0; i < 9; ++i) r.e[static_cast<std::size_t>(i)] = e[static_cast<std::size_t>(i)] - o.e[static_cast<std::size_t>(i)];
    return r;
  }
  Tensor3 operator*(double s) const {
    Tensor3 r;
    for (int i = 0; i < 9; ++i) r.e[static_cast<std::size_t>(i)] = e[static_cast<std::size_t>(i)] * s;
    return r;
  }
  Tensor3 operator*(const Tensor3& o) const {
    Tensor3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
        r(i, j) = s;
      }
    return r;
  }

  double max_abs() const {
    double m = 0;
    for (double v : e) m = std::max(m, std::abs(v));
    return m;
  }

  double frobenius_sq() const {
    double s = 0;
    for (double v : e) s += v * v;
    return s;
  }
};

inline double det(const Tensor3& f) {
  return f(0, 0) * (f(1, 1) * f(2, 2) - f(1, 2) * f(2, 1)) -
         f(0, 1) * (f(1, 0) * f(2, 2) - f(1, 2) * f(2, 0)) +
         f(0, 2) * (f(1, 0) * f(2, 1) - f(1, 1) * f(2, 0));
}

// cof F = det(F) F^{-T} for invertible F; computed entrywise so it is defined
// for singular F as well.
inline Tensor3 cofactor(const Tensor3& f) {
  Tensor3 c;
  c(0, 0) = f(1, 1) * f(2, 2) - f(1, 2) * f(2, 1);
  c(0, 1) = f(1, 2) * f(2, 0) - f(1, 0) * f(2, 2);
  c(0, 2) = f(1, 0) * f(2, 1) - f(1, 1) * f(2, 0);
  c(1, 0) = f(0, 2) * f(2, 1) - f(0, 1) * f(2, 2);
  c(1, 1) = f(0, 0) * f(2, 2) - f(0, 2) * f(2, 0);
  c(1, 2) = f(0, 1) * f(2, 0) - f(0, 0) * f(2, 1);
  c(2, 0) = f(0, 1) * f(1, 2) - f(0, 2) * f(1, 1);
  c(2, 1) = f(0, 2) * f(1, 0) - f(0, 0) * f(1, 2);
  c(2, 2) = f(0, 0) * f(1, 1) - f(0, 1) * f(1, 0);
  return c;
}

inline Tensor3 outer(const std::array<double, 3>& u, const std::array<double, 3>& v) {
  Tensor3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
  return r;
}

}  // namespace polyflex
