// SPDX-License-Identifier: Apache-2.0
#include "polyflex/reference_models.hpp"

#include <cmath>

#include "polyflex/datagen.hpp"
#include "polyflex/errors.hpp"
#include "polyflex/kinematics.hpp"
#include "polyflex/rng.hpp"

namespace polyflex {

MaterialParams default_params(MaterialId id) {
  MaterialParams p;
  p.id = id;
  switch (id) {
    case MaterialId::NeoHooke:
      p.c1 = 1.0;
      break;
    case MaterialId::MooneyRivlin:
      p.c1 = 0.8;
      p.c2 = 0.2;
      break;
    case MaterialId::Gent:
      p.c1 = 1.0;
      p.Im = 30.0;
      break;
    case MaterialId::ArrudaBoyce:
      p.c1 = 1.7;
      p.N = 4.0;
      break;
    case MaterialId::MielkeSmooth:
    case MaterialId::AdditiveMielkeSmooth:
      p.a = 10.0;
      break;
  }
  return p;
}

MaterialId material_from_name(const std::string& name) {
  if (name == "neo-hooke") return MaterialId::NeoHooke;
  if (name == "mooney-rivlin") return MaterialId::MooneyRivlin;
  if (name == "gent") return MaterialId::Gent;
  if (name == "arruda-boyce") return MaterialId::ArrudaBoyce;
  if (name == "mielke" || name == "inc-mielke") return MaterialId::MielkeSmooth;
  if (name == "additive-mielke") return MaterialId::AdditiveMielkeSmooth;
  throw Error("unknown material: " + name);
}

std::string material_name(MaterialId id) {
  switch (id) {
    case MaterialId::NeoHooke:
      return "neo-hooke";
    case MaterialId::MooneyRivlin:
      return "mooney-rivlin";
    case MaterialId::Gent:
      return "gent";
    case MaterialId::ArrudaBoyce:
      return "arruda-boyce";
    case MaterialId::MielkeSmooth:
      return "mielke";
    case MaterialId::AdditiveMielkeSmooth:
      return "additive-mielke";
  }
  return "?";
}

namespace {

bool is_mielke(MaterialId id) {
  return id == MaterialId::MielkeSmooth || id == MaterialId::AdditiveMielkeSmooth;
}

// Energies of the I1-based classical models as functions of I1C, plus their
// derivative dPsi/dI1C.
double classical_energy(const MaterialParams& p, double i1, double i2) {
  switch (p.id) {
    case MaterialId::NeoHooke:
      return p.c1 * (i1 - 3.0);
    case MaterialId::MooneyRivlin:
      return p.c1 * (i1 - 3.0) + p.c2 * (i2 - 3.0);
    case MaterialId::Gent: {
      const double arg = 1.0 - (i1 - 3.0) / (p.Im - 3.0);
      if (arg <= 0.0) throw GentLockingExceeded();
      return -p.c1 * (p.Im - 3.0) * std::log(arg);
    }
    case MaterialId::ArrudaBoyce: {
      const double n = p.N;
      const double i1p2 = i1 * i1, i1p3 = i1p2 * i1, i1p4 = i1p3 * i1, i1p5 = i1p4 * i1;
      return p.c1 * (0.5 * (i1 - 3.0) + (i1p2 - 9.0) / (20.0 * n) +
                     11.0 * (i1p3 - 27.0) / (1050.0 * n * n) +
                     19.0 * (i1p4 - 81.0) / (7000.0 * n * n * n) +
                     519.0 * (i1p5 - 243.0) / (673750.0 * n * n * n * n));
    }
    default:
      throw Error("not a classical model");
  }
}

double classical_dpsi_di1(const MaterialParams& p, double i1) {
  switch (p.id) {
    case MaterialId::NeoHooke:
      return p.c1;
    case MaterialId::MooneyRivlin:
      return p.c1;
    case MaterialId::Gent: {
      const double arg = 1.0 - (i1 - 3.0) / (p.Im - 3.0);
      if (arg <= 0.0) throw GentLockingExceeded();
      return p.c1 / arg;
    }
    case MaterialId::ArrudaBoyce: {
      const double n = p.N;
      const double i1p2 = i1 * i1, i1p3 = i1p2 * i1, i1p4 = i1p3 * i1;
      return p.c1 * (0.5 + 2.0 * i1 / (20.0 * n) + 33.0 * i1p2 / (1050.0 * n * n) +
                     76.0 * i1p3 / (7000.0 * n * n * n) +
                     2595.0 * i1p4 / (673750.0 * n * n * n * n));
    }
    default:
      throw Error("not a classical model");
  }
}

// h_i(nu) = nu_i - nu_j nu_k for the Mielke family.
void mielke_h(const double nu[3], double h[3]) {
  h[0] = nu[0] - nu[1] * nu[2];
  h[1] = nu[1] - nu[0] * nu[2];
  h[2] = nu[2] - nu[0] * nu[1];
}

// (1/a) log(sum cosh(a h_i)), evaluated in shifted form so large a h_i do not
// overflow.
double mielke_max_smooth(double a, const double h[3]) {
  double m = 0.0;
  for (int i = 0; i < 3; ++i) m = std::max(m, std::abs(a * h[i]));
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double t = a * h[i];
    s += 0.5 * (std::exp(t - m) + std::exp(-t - m));
  }
  return (m + std::log(s)) / a;
}

// dPsi/dh_i of the max-type smooth energy: sinh(a h_i) / sum cosh(a h_j).
void mielke_max_smooth_grad(double a, const double h[3], double dh[3]) {
  double m = 0.0;
  for (int i = 0; i < 3; ++i) m = std::max(m, std::abs(a * h[i]));
  double s = 0.0;
  double sh[3];
  for (int i = 0; i < 3; ++i) {
    const double t = a * h[i];
    s += 0.5 * (std::exp(t - m) + std::exp(-t - m));
    sh[i] = 0.5 * (std::exp(t - m) - std::exp(-t - m));
  }
  for (int i = 0; i < 3; ++i) dh[i] = sh[i] / s;
}

double log_cosh(double t) {
  // |t| - log 2 + log1p(exp(-2|t|))
  const double at = std::abs(t);
  return at + std::log1p(std::exp(-2.0 * at)) - std::log(2.0);
}

double mielke_energy_nu(const MaterialParams& p, const double nu[3]) {
  double h[3];
  mielke_h(nu, h);
  if (p.id == MaterialId::MielkeSmooth) return mielke_max_smooth(p.a, h);
  return (log_cosh(p.a * h[0]) + log_cosh(p.a * h[1]) + log_cosh(p.a * h[2])) / p.a;
}

std::array<double, 3> mielke_nu_gradient(const MaterialParams& p, const double nu[3]) {
  double h[3], dh[3];
  mielke_h(nu, h);
  if (p.id == MaterialId::MielkeSmooth) {
    mielke_max_smooth_grad(p.a, h, dh);
  } else {
    for (int i = 0; i < 3; ++i) dh[i] = std::tanh(p.a * h[i]);
  }
  // dh_i/dnu rows: h1 -> (1, -nu3, -nu2), h2 -> (-nu3, 1, -nu1), h3 -> (-nu2, -nu1, 1)
  return {dh[0] - dh[1] * nu[2] - dh[2] * nu[1],
          -dh[0] * nu[2] + dh[1] - dh[2] * nu[0],
          -dh[0] * nu[1] - dh[1] * nu[0] + dh[2]};
}

constexpr double kDegenerateGap = 1e-8;

}  // namespace

double ref_energy(const MaterialParams& p, const Tensor3& f) {
  if (!f.all_finite()) throw NonFinite();
  if (det(f) <= 0.0) throw NonPositiveDet();
  if (is_mielke(p.id)) {
    if (f.is_diagonal()) {
      const double nu[3] = {f(0, 0), f(1, 1), f(2, 2)};
      return mielke_energy_nu(p, nu);
    }
    const auto nu = signed_singular_values(f);
    return mielke_energy_nu(p, nu.nu.data());
  }
  const auto inv = cauchy_green_invariants(f);
  return classical_energy(p, inv[0], inv[1]);
}

Tensor3 ref_stress(const MaterialParams& p, const Tensor3& f, bool incompressible) {
  if (!f.all_finite()) throw NonFinite();
  if (det(f) <= 0.0) throw NonPositiveDet();
  if (incompressible && std::abs(det(f) - 1.0) > 1e-8) throw NotIncompressible();

  Tensor3 g;
  if (is_mielke(p.id)) {
    if (f.is_diagonal()) {
      // Same symmetrized fast path as the network stress: exact for repeated
      // diagonal entries.
      const double nu[3] = {f(0, 0), f(1, 1), f(2, 2)};
      const auto gn = mielke_nu_gradient(p, nu);
      g = Tensor3::diag(gn[0], gn[1], gn[2]);
    } else {
      SvdTriplet t = svd3(f);
      double gap = std::abs(t.nu.nu[0] - t.nu.nu[1]);
      gap = std::min(gap, std::abs(t.nu.nu[0] - t.nu.nu[2]));
      gap = std::min(gap, std::abs(t.nu.nu[1] - t.nu.nu[2]));
      if (gap < kDegenerateGap) {
        Rng jitter(static_cast<std::uint64_t>(f.frobenius_sq() * 1e6) + 29);
        Tensor3 fp = f;
        for (int i = 0; i < 3; ++i) fp(i, i) += 1e-9 * jitter.uniform(0.5, 1.5);
        t = svd3(fp);
      }
      const auto gn = mielke_nu_gradient(p, t.nu.nu.data());
      g = Tensor3::zero();
      for (int k = 0; k < 3; ++k) {
        const std::array<double, 3> uk = {t.r1(0, k), t.r1(1, k), t.r1(2, k)};
        const std::array<double, 3> vk = {t.r2(k, 0), t.r2(k, 1), t.r2(k, 2)};
        g = g + outer(uk, vk) * gn[static_cast<std::size_t>(k)];
      }
    }
  } else {
    const auto inv = cauchy_green_invariants(f);
    const double dpsi1 = classical_dpsi_di1(p, inv[0]);
    // dI1C/dF = 2F; dI2C/dF = 2 (I1C F - F C)
    g = f * (2.0 * dpsi1);
    if (p.id == MaterialId::MooneyRivlin && p.c2 != 0.0) {
      const Tensor3 c = f.transposed() * f;
      g = g + (f * inv[0] - f * c) * (2.0 * p.c2);
    }
  }

  if (!incompressible) return g;
  const double pressure = solve_pressure(g, f);
  return g - cofactor(f) * pressure;
}

}  // namespace polyflex
