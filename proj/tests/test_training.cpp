// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "polyflex/errors.hpp"
#include "polyflex/rng.hpp"
#include "polyflex/training.hpp"

using namespace polyflex;

namespace {

TrainConfig small_config(int input_size) {
  TrainConfig cfg;
  ArchitectureSpec a;
  a.input_size = input_size;
  a.hidden = {4};
  cfg.architectures = {a};
  cfg.restarts = 2;
  cfg.max_iter = 400;
  cfg.base_seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("default architecture sweep") {
  const auto archs = default_architectures(6);
  REQUIRE(archs.size() == 8);
  CHECK(archs[0].str() == "6-4-1");
  CHECK(archs[1].str() == "6-8-1");
  CHECK(archs[2].str() == "6-12-1");
  CHECK(archs[3].str() == "6-4-2-1");
  CHECK(archs[4].str() == "6-8-4-1");
  CHECK(archs[5].str() == "6-12-8-1");
  CHECK(archs[6].str() == "6-8-4-4-1");
  CHECK(archs[7].str() == "6-12-8-4-1");
}

TEST_CASE("multi_restart fits an easy target and is deterministic") {
  const VariantKind kind{Family::UInvar, false};
  const Dataset data =
      build_dataset(default_params(MaterialId::MooneyRivlin), incompressible_loadcases(), true);
  const TrainConfig cfg = small_config(kind.input_size());

  const TrainResult r1 = multi_restart(kind, data, cfg);
  CHECK(r1.instances.size() == 2);
  CHECK(r1.instances[0].converged);
  CHECK(r1.best.kind.name() == "inc-uinvar");
  CHECK(std::abs(energy(r1.best, Tensor3::identity())) < 1e-12);

  const TrainResult r2 = multi_restart(kind, data, cfg);
  CHECK(report_to_json(kind, cfg, r1) == report_to_json(kind, cfg, r2));

  // seeds follow base_seed + instance index
  CHECK(r1.instances[0].seed == 5);
  CHECK(r1.instances[1].seed == 6);
}

TEST_CASE("selection prefers validation mse when a split exists") {
  const VariantKind kind{Family::ReducedCssv, false};
  Dataset data =
      build_dataset(default_params(MaterialId::NeoHooke), incompressible_loadcases(), true);
  // move every fourth sample to validation
  for (std::size_t i = 0; i < data.samples.size(); i += 4) data.samples[i].split = Split::Val;
  const TrainConfig cfg = small_config(kind.input_size());
  const TrainResult r = multi_restart(kind, data, cfg);
  for (const InstanceRecord& rec : r.instances) CHECK(rec.val_mse.has_value());
  const double best_val = *r.instances[r.best_index].val_mse;
  for (const InstanceRecord& rec : r.instances) CHECK(best_val <= *rec.val_mse);
}

TEST_CASE("fine_tune never worsens the training error") {
  const VariantKind kind{Family::UInvar, false};
  const Dataset data =
      build_dataset(default_params(MaterialId::MooneyRivlin), incompressible_loadcases(), true);
  TrainConfig cfg = small_config(kind.input_size());
  cfg.max_iter = 400;
  const TrainResult r = multi_restart(kind, data, cfg);
  const double before = mse_loss(r.best, data, Split::Train);

  const VariantModel tuned = fine_tune(r.best, data, cfg);
  const double after = mse_loss(tuned, data, Split::Train);
  CHECK(after <= before * (1.0 + 1e-12));

  // a second pass from the tuned point must not worsen and has little left
  const VariantModel tuned2 = fine_tune(tuned, data, cfg);
  const double again = mse_loss(tuned2, data, Split::Train);
  CHECK(again <= after * (1.0 + 1e-12));
  CHECK(again >= after * 0.5);
}

TEST_CASE("fine_tune recovers a perturbed optimum") {
  const VariantKind kind{Family::UInvar, false};
  const Dataset data =
      build_dataset(default_params(MaterialId::MooneyRivlin), incompressible_loadcases(), true);
  TrainConfig cfg = small_config(kind.input_size());
  cfg.max_iter = 600;
  VariantModel m = multi_restart(kind, data, cfg).best;
  const double converged = mse_loss(m, data, Split::Train);

  Rng rng(99);
  for (Mat& w : m.params.wx)
    for (double& v : w.v) v += rng.uniform(-1e-3, 1e-3);
  project(m.params);
  const double perturbed = mse_loss(m, data, Split::Train);
  CHECK(perturbed > converged);

  const VariantModel recovered = fine_tune(m, data, cfg);
  CHECK(mse_loss(recovered, data, Split::Train) <= converged * (1.0 + 1e-2) + 1e-12);
}

TEST_CASE("training on a mismatched dataset fails instance-wise") {
  const VariantKind kind{Family::Cssv, false};
  const Dataset comp = build_dataset(default_params(MaterialId::MielkeSmooth),
                                     mielke_compressible_grid(), false);
  const TrainConfig cfg = small_config(kind.input_size());
  CHECK_THROWS_AS(multi_restart(kind, comp, cfg), Error);
}
