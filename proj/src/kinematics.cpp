// SPDX-License-Identifier: Apache-2.0
#include "polyflex/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include "polyflex/errors.hpp"

namespace polyflex {

namespace {

// Cyclic Jacobi eigensolver for a symmetric 3x3 matrix. Returns eigenvalues in
// w and orthonormal eigenvectors as columns of v. Converges to machine
// precision in a handful of sweeps for 3x3.
void jacobi_eigen3(const Tensor3& a_in, Tensor3& v, std::array<double, 3>& w) {
  double a[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a[i][j] = a_in(i, j);
  v = Tensor3::identity();

  for (int sweep = 0; sweep < 50; ++sweep) {
    double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
    if (off == 0.0) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        const double apq = a[p][q];
        if (apq == 0.0) continue;
        const double diff = a[q][q] - a[p][p];
        double t;
        if (std::abs(apq) < 1e-300) {
          t = 0.0;
        } else {
          const double theta = 0.5 * diff / apq;
          t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        const double h = t * apq;
        a[p][p] -= h;
        a[q][q] += h;
        a[p][q] = a[q][p] = 0.0;
        const int r = 3 - p - q;  // remaining index
        {
          const double arp = a[r][p];
          const double arq = a[r][q];
          a[r][p] = a[p][r] = arp - s * (arq + tau * arp);
          a[r][q] = a[q][r] = arq + s * (arp - tau * arq);
        }
        for (int i = 0; i < 3; ++i) {
          const double vip = v(i, p);
          const double viq = v(i, q);
          v(i, p) = vip - s * (viq + tau * vip);
          v(i, q) = viq + s * (vip - tau * viq);
        }
      }
    }
  }
  for (int i = 0; i < 3; ++i) w[static_cast<std::size_t>(i)] = a[i][i];
}

std::array<double, 3> col(const Tensor3& m, int j) {
  return {m(0, j), m(1, j), m(2, j)};
}

void set_col(Tensor3& m, int j, const std::array<double, 3>& c) {
  m(0, j) = c[0];
  m(1, j) = c[1];
  m(2, j) = c[2];
}

std::array<double, 3> cross(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

double norm3(const std::array<double, 3>& a) { return std::sqrt(dot3(a, a)); }

std::array<double, 3> normalized(const std::array<double, 3>& a) {
  const double n = norm3(a);
  return {a[0] / n, a[1] / n, a[2] / n};
}

// Any unit vector orthogonal to u.
std::array<double, 3> any_orthogonal(const std::array<double, 3>& u) {
  const std::array<double, 3> trial =
      std::abs(u[0]) < 0.9 ? std::array<double, 3>{1, 0, 0} : std::array<double, 3>{0, 1, 0};
  std::array<double, 3> c = cross(u, trial);
  return normalized(c);
}

}  // namespace

SvdTriplet svd3(const Tensor3& f) {
  if (!f.all_finite()) throw NonFinite();

  Tensor3 v;
  std::array<double, 3> w;
  jacobi_eigen3(f.transposed() * f, v, w);

  // sort eigenpairs descending
  std::array<int, 3> idx = {0, 1, 2};
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return w[static_cast<std::size_t>(a)] > w[static_cast<std::size_t>(b)]; });
  Tensor3 vs;
  std::array<double, 3> sigma;
  for (int k = 0; k < 3; ++k) {
    set_col(vs, k, col(v, idx[static_cast<std::size_t>(k)]));
    sigma[static_cast<std::size_t>(k)] = std::sqrt(std::max(w[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])], 0.0));
  }

  const Tensor3 b = f * vs;  // columns: sigma_k * u_k
  const double tiny = std::max(sigma[0], 1e-300) * 1e-13;

  Tensor3 u = Tensor3::identity();
  std::array<double, 3> u0 = sigma[0] > tiny ? normalized(col(b, 0)) : std::array<double, 3>{1, 0, 0};
  std::array<double, 3> u1;
  if (sigma[1] > tiny) {
    std::array<double, 3> c = col(b, 1);
    const double p = dot3(c, u0);
    c = {c[0] - p * u0[0], c[1] - p * u0[1], c[2] - p * u0[2]};
    u1 = norm3(c) > 0.0 ? normalized(c) : any_orthogonal(u0);
  } else {
    u1 = any_orthogonal(u0);
  }
  std::array<double, 3> u2 = cross(u0, u1);
  if (sigma[2] > tiny && dot3(u2, col(b, 2)) < 0.0) u2 = {-u2[0], -u2[1], -u2[2]};
  set_col(u, 0, u0);
  set_col(u, 1, u1);
  set_col(u, 2, u2);

  // Fold improper handedness of either factor into the sign of the smallest
  // singular value so that both rotations are proper. For det F > 0 this
  // leaves all nu positive; for det F < 0 exactly one turns negative.
  if (det(u) < 0.0) {
    set_col(u, 2, {-u2[0], -u2[1], -u2[2]});
    sigma[2] = -sigma[2];
  }
  if (det(vs) < 0.0) {
    const auto v2 = col(vs, 2);
    set_col(vs, 2, {-v2[0], -v2[1], -v2[2]});
    sigma[2] = -sigma[2];
  }

  return SvdTriplet{u, SignedSingularValues{sigma}, vs.transposed()};
}

SignedSingularValues signed_singular_values(const Tensor3& f) { return svd3(f).nu; }

std::array<Tensor3, 3> dnu_dF(const Tensor3& f, double gap_tol) {
  const SvdTriplet t = svd3(f);
  const auto& nu = t.nu.nu;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (std::abs(nu[static_cast<std::size_t>(i)] - nu[static_cast<std::size_t>(j)]) < gap_tol)
        throw DegenerateSpectrum();

  std::array<Tensor3, 3> d;
  for (int k = 0; k < 3; ++k) {
    const std::array<double, 3> uk = {t.r1(0, k), t.r1(1, k), t.r1(2, k)};
    const std::array<double, 3> vk = {t.r2(k, 0), t.r2(k, 1), t.r2(k, 2)};
    d[static_cast<std::size_t>(k)] = outer(uk, vk);
  }
  return d;
}

std::array<double, 3> stretch_invariants(const SignedSingularValues& nu) {
  // evaluated on sorted absolute values so the result is bitwise invariant
  // under every Pi3 transform of nu
  std::array<double, 3> l = {std::abs(nu.nu[0]), std::abs(nu.nu[1]), std::abs(nu.nu[2])};
  std::sort(l.begin(), l.end());
  return {l[0] + l[1] + l[2], l[1] * l[2] + l[0] * l[2] + l[0] * l[1], l[0] * l[1] * l[2]};
}

std::array<double, 2> cauchy_green_invariants(const Tensor3& f) {
  const Tensor3 c = f.transposed() * f;
  const double i1 = c(0, 0) + c(1, 1) + c(2, 2);
  const Tensor3 cc = cofactor(c);
  const double i2 = cc(0, 0) + cc(1, 1) + cc(2, 2);
  return {i1, i2};
}

}  // namespace polyflex
