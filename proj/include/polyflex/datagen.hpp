// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "polyflex/reference_models.hpp"
#include "polyflex/tensor3.hpp"

namespace polyflex {

enum class Split : std::uint8_t { Train, Val, Test };

/// One strain--stress tuple. mask flags the stress components that
/// participate in the loss; masked-out components carry value 0.
struct Sample {
  Tensor3 F;
  Tensor3 P;  // MPa
  std::array<std::uint8_t, 9> mask{1, 1, 1, 1, 1, 1, 1, 1, 1};
  Split split = Split::Train;
};

struct Dataset {
  std::vector<Sample> samples;

  std::size_t count(Split s) const;
};

/// The 52 diagonal incompressible training states: no load, uniaxial
/// F11 in [0.5:0.1:2.5], biaxial F11 = F22 in [0.7:0.1:2.0], pure shear
/// F11 in [0.5:0.1:2.0] with F22 = 1; F33 from det F = 1. The ranges are
/// kept whole (each contains the unloaded state once), so the four lists
/// concatenate to exactly 52 states.
std::vector<Tensor3> incompressible_loadcases();

/// 21 x 21 grid [0.5:0.075:2]^2 of (F11, F22) with F33 from incompressibility
/// (441 states).
std::vector<Tensor3> inc_mielke_grid();

/// Diagonal stretches from [0.6:0.2:2.0]^3 with lambda1 >= lambda2 >= lambda3
/// (120 distinct states).
std::vector<Tensor3> mielke_compressible_grid();

/// Lagrange multiplier from P33 = 0 for a diagonal incompressible state:
/// p = F33 * (dPsi/dF)33. Throws NotDiagonal otherwise.
double solve_pressure(const Tensor3& dpsi_dF, const Tensor3& f);

/// Sample every load case with the reference model; full component mask, all
/// samples in the train split (no validation for noise-free synthetic data).
Dataset build_dataset(const MaterialParams& params, const std::vector<Tensor3>& loadcases,
                      bool incompressible);

/// Treloar-format CSV (loadcase in {UT, ET, PS}, stretch, nominal stress in
/// MPa; 56 rows expected). Builds diagonal F per load case, masks the unknown
/// components (UT: P11 only; ET: P11, P22; PS: P11 only, the width component
/// is unmeasured) and splits 41/10/5 at random by split_seed.
Dataset load_treloar(const std::string& path, std::uint64_t split_seed);

// Dataset CSV: header F11..F33,P11..P33,m11..m33,split; 17 significant
// digits; lossless round-trip.
void write_csv(const Dataset& d, const std::string& path);
Dataset read_csv(const std::string& path);

std::string split_name(Split s);

}  // namespace polyflex
