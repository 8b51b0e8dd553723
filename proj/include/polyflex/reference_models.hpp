// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "polyflex/tensor3.hpp"

namespace polyflex {

enum class MaterialId : int {
  NeoHooke,
  MooneyRivlin,
  Gent,
  ArrudaBoyce,
  MielkeSmooth,
  AdditiveMielkeSmooth,
};

/// Analytic material used to generate training data and oracles. c1, c2 in
/// MPa; Im, N dimensionless; a controls the smoothness of the Mielke-family
/// log-cosh approximations.
struct MaterialParams {
  MaterialId id = MaterialId::NeoHooke;
  double c1 = 1.0;
  double c2 = 0.0;
  double Im = 30.0;
  double N = 4.0;
  double a = 10.0;
};

/// Paper defaults: all classical models share the linearized shear modulus.
MaterialParams default_params(MaterialId id);

MaterialId material_from_name(const std::string& name);
std::string material_name(MaterialId id);

/// Energy in MPa. Requires det F > 0; Gent throws GentLockingExceeded at the
/// locking stretch. The Mielke family evaluates on signed singular values.
double ref_energy(const MaterialParams& p, const Tensor3& f);

/// P = dPsi/dF. With incompressible set, |det F - 1| <= 1e-8 is required, F
/// must be diagonal, and p from the P33 = 0 constraint is subtracted.
Tensor3 ref_stress(const MaterialParams& p, const Tensor3& f, bool incompressible = false);

}  // namespace polyflex
