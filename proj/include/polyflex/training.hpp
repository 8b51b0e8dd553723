// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polyflex/datagen.hpp"
#include "polyflex/loss.hpp"
#include "polyflex/variants.hpp"

namespace polyflex {

struct TrainConfig {
  std::vector<ArchitectureSpec> architectures;
  int restarts = 30;
  int max_iter = 1000;
  double grad_tol = 1e-9;
  double f_tol = 2.2e-9;
  bool fine_tune = false;
  std::uint64_t base_seed = 0;
};

/// The paper's eight sweep configurations: a-4-1, a-8-1, a-12-1, a-4-2-1,
/// a-8-4-1, a-12-8-1, a-8-4-4-1, a-12-8-4-1.
std::vector<ArchitectureSpec> default_architectures(int input_size);

struct InstanceRecord {
  std::string arch;
  std::uint64_t seed = 0;
  double train_mse = 0.0;
  std::optional<double> val_mse;
  int iterations = 0;
  bool converged = false;
};

struct TrainResult {
  VariantModel best;
  std::size_t best_index = 0;
  std::vector<InstanceRecord> instances;
};

/// Independent restarts over all (architecture, seed) pairs; instance index
/// maps to seed = base_seed + index. Selection by validation MSE when a
/// validation split exists, by train MSE otherwise. Deterministic for a fixed
/// (config, dataset) regardless of thread count.
TrainResult multi_restart(const VariantKind& kind, const Dataset& data, const TrainConfig& cfg);

/// Second optimization pass with 100x tighter tolerances from the warm start.
/// Keeps the original parameters if the train MSE would worsen.
VariantModel fine_tune(const VariantModel& model, const Dataset& data, const TrainConfig& cfg);

/// Report JSON: config echo + per-instance records + best-model reference.
/// Stable field order and 17-significant-digit reals, so identical runs
/// serialize identically.
std::string report_to_json(const VariantKind& kind, const TrainConfig& cfg,
                           const TrainResult& result);

}  // namespace polyflex
