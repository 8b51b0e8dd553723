// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "polyflex/reference_models.hpp"
#include "polyflex/tensor3.hpp"
#include "polyflex/variants.hpp"

namespace polyflex {

/// Outcome of one property check: worst violation over the sampled inputs and
/// the witness that produced it.
struct CheckReport {
  std::string name;
  int samples = 0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::vector<double> worst_input;

  std::string to_text() const;
  std::string to_json() const;
};

/// Uniform rotation via normalized quaternions.
Tensor3 random_rotation(class Rng& rng);

/// nu sampler: uniform in [0.4, 2.6]^3; for incompressible kinds nu3 is fixed
/// by nu1 nu2 nu3 = 1 and the triple is rejected outside the box.
SignedSingularValues sample_nu(Rng& rng, bool incompressible);

// Midpoint convexity of a scalar function over sampled input pairs.
CheckReport check_convexity(const std::function<double(const std::vector<double>&)>& fn,
                            const std::function<std::vector<double>(Rng&)>& sampler, int n,
                            double tol, std::uint64_t seed);

/// Convexity of the model's network representative on its lifted inputs.
CheckReport check_convexity(const VariantModel& m, int n, double tol, std::uint64_t seed);

// Psi(QF) = Psi(F) = Psi(F Q^T) over random rotations. The model energy is
// evaluated on a random Pi3 orbit representative each call, so a model whose
// tuple average is broken cannot hide behind a canonical decomposition order.
CheckReport check_objectivity_isotropy(const VariantModel& m, int n, double tol,
                                       std::uint64_t seed);
CheckReport check_objectivity_isotropy(const std::function<double(const Tensor3&)>& energy_fn,
                                       bool incompressible, int n, double tol, std::uint64_t seed);

/// Invariance of the nu-energy under all 24 Pi3 transforms.
CheckReport check_pi3(const VariantModel& m, int n, double tol, std::uint64_t seed);
CheckReport check_pi3(const std::function<double(const SignedSingularValues&)>& fn,
                      bool incompressible, int n, double tol, std::uint64_t seed);

/// Non-decreasing network output along every constrained input coordinate
/// (Ball/UInvar only; throws WrongVariant otherwise).
CheckReport check_monotone(const VariantModel& m, int n, double tol, std::uint64_t seed);

/// P F^T symmetry (balance of angular momentum).
CheckReport check_angular_momentum(const VariantModel& m, int n, double tol, std::uint64_t seed);
CheckReport check_angular_momentum(const std::function<Tensor3(const Tensor3&)>& stress_fn,
                                   bool incompressible, int n, double tol, std::uint64_t seed);

/// Stress against central finite differences of the energy.
CheckReport check_stress_fd(const VariantModel& m, int n, double tol, std::uint64_t seed);
CheckReport check_stress_fd(const std::function<double(const Tensor3&)>& energy_fn,
                            const std::function<Tensor3(const Tensor3&)>& stress_fn,
                            bool incompressible, int n, double tol, std::uint64_t seed);

/// |energy(I)| after normalization.
CheckReport check_energy_normalized(const VariantModel& m, double tol);

/// Linearized Young's modulus from a central difference of the incompressible
/// uniaxial nominal stress at lambda = 1, against 6 MPa.
CheckReport check_linearization(const MaterialParams& p, double rel_tol);

}  // namespace polyflex
