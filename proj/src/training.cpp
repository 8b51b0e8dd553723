// SPDX-License-Identifier: Apache-2.0
#include "polyflex/training.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "polyflex/errors.hpp"
#include "polyflex/lbfgs.hpp"

namespace polyflex {

std::vector<ArchitectureSpec> default_architectures(int a) {
  const std::vector<std::vector<int>> hidden = {
      {4}, {8}, {12}, {4, 2}, {8, 4}, {12, 8}, {8, 4, 4}, {12, 8, 4}};
  std::vector<ArchitectureSpec> out;
  out.reserve(hidden.size());
  for (const auto& h : hidden) {
    ArchitectureSpec s;
    s.input_size = a;
    s.hidden = h;
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

struct InstanceOutcome {
  InstanceRecord record;
  std::vector<double> theta;
  int arch_index = 0;
};

InstanceOutcome run_instance(const VariantKind& kind, const ArchitectureSpec& arch,
                             const Dataset& data, const TrainConfig& cfg, std::uint64_t seed,
                             bool has_val) {
  StressLoss train_loss(kind, arch, data, Split::Train);
  // Sample-level parallelism only helps when this is the sole instance; under
  // restart-level parallelism the nested region collapses to one thread.
  train_loss.set_parallel(true);
  const ICNNParams p0 = init_params(arch, kind.constrain_wx(), kind.zero_last_wx(),
                                    kind.wx_free_cols(), seed);
  const ParamVector pv = to_param_vector(p0);

  const Objective obj = [&](std::span<const double> x, std::span<double> grad) {
    return grad.empty() ? train_loss.value(x) : train_loss.value_and_gradient(x, grad);
  };

  OptimizeConfig ocfg;
  ocfg.max_iter = cfg.max_iter;
  ocfg.grad_tol = cfg.grad_tol;
  ocfg.f_tol = cfg.f_tol;
  OptimizeResult r = optimize(obj, pv.value, pv.lower, ocfg);
  int iterations = r.iterations;

  if (cfg.fine_tune) {
    OptimizeConfig tight = ocfg;
    tight.grad_tol = cfg.grad_tol / 100.0;
    tight.f_tol = cfg.f_tol / 100.0;
    OptimizeResult r2 = optimize(obj, r.x, pv.lower, tight);
    iterations += r2.iterations;
    if (r2.f <= r.f) r = std::move(r2);
  }

  InstanceOutcome out;
  out.record.arch = arch.str();
  out.record.seed = seed;
  out.record.train_mse = r.f;
  out.record.iterations = iterations;
  out.record.converged = r.converged;
  out.theta = std::move(r.x);
  if (has_val) {
    StressLoss val_loss(kind, arch, data, Split::Val);
    out.record.val_mse = val_loss.value(out.theta);
  }
  return out;
}

}  // namespace

TrainResult multi_restart(const VariantKind& kind, const Dataset& data, const TrainConfig& cfg) {
  const bool has_val = data.count(Split::Val) > 0;
  const int n_arch = static_cast<int>(cfg.architectures.size());
  const int total = n_arch * cfg.restarts;
  std::vector<InstanceOutcome> outcomes(static_cast<std::size_t>(total));

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (total > 1)
#endif
  for (int idx = 0; idx < total; ++idx) {
    const int ai = idx / cfg.restarts;
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(idx);
    InstanceOutcome out;
    try {
      out = run_instance(kind, cfg.architectures[static_cast<std::size_t>(ai)], data, cfg, seed,
                         has_val);
    } catch (const std::exception&) {
      // failed instances are recorded, not fatal
      out.record.arch = cfg.architectures[static_cast<std::size_t>(ai)].str();
      out.record.seed = seed;
      out.record.train_mse = std::numeric_limits<double>::infinity();
      if (has_val) out.record.val_mse = std::numeric_limits<double>::infinity();
      out.record.converged = false;
    }
    out.arch_index = ai;
    outcomes[static_cast<std::size_t>(idx)] = std::move(out);
  }

  TrainResult result;
  result.instances.reserve(static_cast<std::size_t>(total));
  std::size_t best = 0;
  auto score = [&](const InstanceRecord& r) {
    return has_val ? *r.val_mse : r.train_mse;
  };
  for (int idx = 0; idx < total; ++idx) {
    result.instances.push_back(outcomes[static_cast<std::size_t>(idx)].record);
    if (score(result.instances.back()) < score(result.instances[best]))
      best = static_cast<std::size_t>(idx);
  }
  result.best_index = best;

  const InstanceOutcome& bo = outcomes[best];
  if (bo.theta.empty()) throw Error("all training instances failed");
  const ArchitectureSpec arch = cfg.architectures[static_cast<std::size_t>(bo.arch_index)];
  ICNNParams params = make_params(arch, kind.constrain_wx(), kind.zero_last_wx(),
                                  kind.wx_free_cols());
  from_param_vector(params, bo.theta);
  result.best = VariantModel{kind, std::move(params), 0.0};
  normalize(result.best);
  return result;
}

VariantModel fine_tune(const VariantModel& model, const Dataset& data, const TrainConfig& cfg) {
  StressLoss train_loss(model.kind, model.params.arch, data, Split::Train);
  train_loss.set_parallel(true);
  const ParamVector pv = to_param_vector(model.params);
  const double before = train_loss.value(pv.value);

  const Objective obj = [&](std::span<const double> x, std::span<double> grad) {
    return grad.empty() ? train_loss.value(x) : train_loss.value_and_gradient(x, grad);
  };
  OptimizeConfig ocfg;
  ocfg.max_iter = cfg.max_iter;
  ocfg.grad_tol = cfg.grad_tol / 100.0;
  ocfg.f_tol = cfg.f_tol / 100.0;
  const OptimizeResult r = optimize(obj, pv.value, pv.lower, ocfg);
  if (r.f > before) return model;

  VariantModel out = model;
  from_param_vector(out.params, r.x);
  out.normalization = 0.0;
  normalize(out);
  return out;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string report_to_json(const VariantKind& kind, const TrainConfig& cfg,
                           const TrainResult& result) {
  std::ostringstream os;
  os << "{\"variant\":\"" << kind.name() << "\",\"config\":{\"architectures\":[";
  for (std::size_t i = 0; i < cfg.architectures.size(); ++i) {
    if (i) os << ",";
    os << "\"" << cfg.architectures[i].str() << "\"";
  }
  os << "],\"restarts\":" << cfg.restarts << ",\"max_iter\":" << cfg.max_iter
     << ",\"grad_tol\":" << fmt17(cfg.grad_tol) << ",\"f_tol\":" << fmt17(cfg.f_tol)
     << ",\"fine_tune\":" << (cfg.fine_tune ? "true" : "false")
     << ",\"base_seed\":" << cfg.base_seed << "},\"instances\":[";
  for (std::size_t i = 0; i < result.instances.size(); ++i) {
    const InstanceRecord& r = result.instances[i];
    if (i) os << ",";
    os << "{\"arch\":\"" << r.arch << "\",\"seed\":" << r.seed
       << ",\"train_mse\":" << fmt17(r.train_mse);
    if (r.val_mse) os << ",\"val_mse\":" << fmt17(*r.val_mse);
    os << ",\"iterations\":" << r.iterations
       << ",\"converged\":" << (r.converged ? "true" : "false") << "}";
  }
  const InstanceRecord& b = result.instances[result.best_index];
  os << "],\"best\":{\"index\":" << result.best_index << ",\"arch\":\"" << b.arch
     << "\",\"seed\":" << b.seed << ",\"train_mse\":" << fmt17(b.train_mse);
  if (b.val_mse) os << ",\"val_mse\":" << fmt17(*b.val_mse);
  os << "}}";
  return os.str();
}

}  // namespace polyflex
