// SPDX-License-Identifier: Apache-2.0
//
// Throughput comparison of the training-loss implementations: the batched
// kernel serial vs OpenMP over samples vs the scalar-tape reference.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "polyflex/datagen.hpp"
#include "polyflex/loss.hpp"

namespace {

using namespace polyflex;
using clock_type = std::chrono::steady_clock;

double time_eval(StressLoss& loss, const std::vector<double>& theta, std::vector<double>& grad,
                 bool parallel, int reps) {
  loss.set_parallel(parallel);
  loss.value_and_gradient(theta, grad);  // warmup
  const auto t0 = clock_type::now();
  for (int i = 0; i < reps; ++i) loss.value_and_gradient(theta, grad);
  return std::chrono::duration<double>(clock_type::now() - t0).count() / reps * 1e6;
}

}  // namespace

int main() {
#ifdef _OPENMP
  if (const char* env = std::getenv("POLYFLEX_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
  std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without openmp\n");
#endif

  struct Case {
    const char* name;
    Family fam;
    bool compressible;
  };
  const Case cases[] = {
      {"inc-cssv", Family::Cssv, false},   {"inc-rcssv", Family::ReducedCssv, false},
      {"inc-ball", Family::Ball, false},   {"inc-uinvar", Family::UInvar, false},
      {"cssv", Family::Cssv, true},        {"ball", Family::Ball, true},
  };

  const Dataset inc =
      build_dataset(default_params(MaterialId::MielkeSmooth), inc_mielke_grid(), true);
  const Dataset comp =
      build_dataset(default_params(MaterialId::MielkeSmooth), mielke_compressible_grid(), false);

  std::printf("%-11s %8s %8s %10s %10s %10s %8s %12s\n", "variant", "samples", "params",
              "serial", "openmp", "tape", "speedup", "|f_k - f_t|");
  for (const Case& c : cases) {
    const VariantKind kind{c.fam, c.compressible};
    ArchitectureSpec arch;
    arch.input_size = kind.input_size();
    arch.hidden = {12, 8};
    const Dataset& data = c.compressible ? comp : inc;
    StressLoss loss(kind, arch, data, Split::Train);
    const ICNNParams p = init_params(arch, kind.constrain_wx(), kind.zero_last_wx(),
                                     kind.wx_free_cols(), 3);
    const ParamVector pv = to_param_vector(p);
    std::vector<double> g(pv.value.size()), g_ref(pv.value.size());

    const int reps = kind.tuple_count() >= 24 ? 50 : 200;
    const double us_serial = time_eval(loss, pv.value, g, false, reps);
    const double us_parallel = time_eval(loss, pv.value, g, true, reps);

    const auto t0 = clock_type::now();
    const double f_tape = loss.value_and_gradient_reference(pv.value, g_ref);
    const double us_tape = std::chrono::duration<double>(clock_type::now() - t0).count() * 1e6;
    loss.set_parallel(false);
    const double f_kernel = loss.value_and_gradient(pv.value, g);
    double gdiff = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) gdiff = std::max(gdiff, std::abs(g[i] - g_ref[i]));

    std::printf("%-11s %8zu %8d %8.0fus %8.0fus %8.0fus %7.2fx %12.2e\n", c.name,
                loss.sample_count(), loss.n_params(), us_serial, us_parallel, us_tape,
                us_serial / us_parallel, std::abs(f_kernel - f_tape) + gdiff);
  }
  return 0;
}
