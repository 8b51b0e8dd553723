// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "polyflex/icnn.hpp"
#include "polyflex/kinematics.hpp"
#include "polyflex/tensor3.hpp"

namespace polyflex {

enum class Family : std::uint8_t { Cssv, ReducedCssv, Ball, UInvar };

/// One of the four polyconvex network families, compressible or not.
///
///   family       inputs (comp/inc)  tuples  Wx bound        last Wx zeroed
///   Cssv         7 / 6              24      free            yes
///   ReducedCssv  3 / 2              4       free            yes
///   Ball         7 / 6              6       >= 0 (not J)    no
///   UInvar       3 / 2              1       >= 0 (not J)    no
struct VariantKind {
  Family family = Family::Cssv;
  bool compressible = true;

  int input_size() const;
  int tuple_count() const;
  bool constrain_wx() const { return family == Family::Ball || family == Family::UInvar; }
  bool zero_last_wx() const { return family == Family::Cssv || family == Family::ReducedCssv; }
  // Per-column exemption from the non-negativity bound: the determinant input
  // of compressible Ball/UInvar only has to be convex, not non-decreasing.
  std::vector<std::uint8_t> wx_free_cols() const;

  std::string name() const;  // "cssv", "inc-ball", ...
  static VariantKind parse(const std::string& s);
};

/// Network potential: variant kind, ICNN weights, additive normalization
/// constant (MPa) fixing energy(I) = 0.
struct VariantModel {
  VariantKind kind;
  ICNNParams params;
  double normalization = 0.0;
};

/// The n lifted input vectors x^(j) fed to the shared ICNN; their average is
/// the energy. Cssv walks the full Pi3 orbit, ReducedCssv the four sign
/// classes of the elementary symmetric polynomials, Ball the six Perm(3) images
/// of the stretches, UInvar the single invariant vector.
std::vector<std::vector<double>> input_tuples(const VariantKind& kind,
                                              const SignedSingularValues& nu);

/// Tuples plus d x^(j) / d nu, flattened for the training kernel:
/// xs has tuple_count*a entries, jac has tuple_count*a*3 (row-major in (m,k)).
void input_tuples_flat(const VariantKind& kind, const std::array<double, 3>& nu,
                       std::vector<double>& xs, std::vector<double>& jac);

/// Average network energy evaluated on a nu representative (no F checks).
/// Exactly invariant under the variant's symmetry group by construction.
double energy_from_nu(const VariantModel& m, const SignedSingularValues& nu);

/// d energy / d nu_k of the averaged potential; well defined for repeated nu.
std::array<double, 3> energy_nu_gradient(const VariantModel& m, const SignedSingularValues& nu);

/// Energy in MPa. Requires det F > 0; incompressible kinds additionally
/// require |det F - 1| <= 1e-8.
double energy(const VariantModel& m, const Tensor3& f);

/// Smooth extension of the energy used by finite-difference oracles; skips
/// the det-F preconditions.
double energy_unchecked(const VariantModel& m, const Tensor3& f);

/// P = dPsi/dF via the chain rule through the signed singular values.
/// At (near-)repeated singular values of a non-diagonal F, F is perturbed by
/// 1e-9 * diag(jitter) before decomposition; for diagonal F the averaged
/// formula is evaluated exactly (the symmetrized sum is basis independent).
Tensor3 stress(const VariantModel& m, const Tensor3& f);
Tensor3 stress_unchecked(const VariantModel& m, const Tensor3& f);

/// P = dPsi/dF - p cof F for the incompressible extra-stress split.
Tensor3 stress_incompressible(const VariantModel& m, const Tensor3& f, double pressure);

/// Shift the normalization constant so energy(I) = 0. Idempotent.
void normalize(VariantModel& m);

/// Hand-built ReLU CSSV network reproducing
/// max(|nu1 - nu2 nu3|, |nu2 - nu1 nu3|, |nu3 - nu1 nu2|) exactly.
VariantModel mielke_exact_network();

// Model JSON (fixed field order, 17 significant digits).
std::string model_to_json(const VariantModel& m);
VariantModel model_from_json(const std::string& text);
void write_model(const VariantModel& m, const std::string& path);
VariantModel read_model(const std::string& path);

}  // namespace polyflex
