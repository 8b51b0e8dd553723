// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

#include "polyflex/tensor3.hpp"

namespace polyflex {

/// Signed singular values nu of F with nu1*nu2*nu3 = det F. The triple is one
/// representative of the Pi3 orbit (24 permutation/even-sign-flip images).
struct SignedSingularValues {
  std::array<double, 3> nu{};
  double product() const { return nu[0] * nu[1] * nu[2]; }
};

/// F = r1 * diag(nu) * r2 with r1, r2 in SO(3).
struct SvdTriplet {
  Tensor3 r1;
  SignedSingularValues nu;
  Tensor3 r2;
};

// Decomposition into two proper rotations and signed singular values.
// For det F > 0 all returned nu are positive (descending); for det F < 0
// exactly one is negative. Throws NonFinite on NaN/Inf input.
SvdTriplet svd3(const Tensor3& f);

SignedSingularValues signed_singular_values(const Tensor3& f);

// d nu_k / dF = u_k (x) v_k, valid only for pairwise-distinct singular values.
// Throws DegenerateSpectrum when any |nu_i - nu_j| < gap_tol. Callers that
// need stress at repeated values go through the Pi3-averaged formula instead,
// which stays well defined there (see variants).
std::array<Tensor3, 3> dnu_dF(const Tensor3& f, double gap_tol = 1e-8);

/// Invariants of the right stretch tensor U, evaluated on lambda_i = |nu_i|:
/// (lambda1+lambda2+lambda3, lambda2*lambda3+lambda1*lambda3+lambda1*lambda2,
///  lambda1*lambda2*lambda3).
std::array<double, 3> stretch_invariants(const SignedSingularValues& nu);

/// (I1C, I2C) = (tr C, tr cof C) with C = F^T F.
std::array<double, 2> cauchy_green_invariants(const Tensor3& f);

}  // namespace polyflex
