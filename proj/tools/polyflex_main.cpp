// SPDX-License-Identifier: Apache-2.0
//
// polyflex command line: dataset generation, training, evaluation, property
// verification and curve export for the polyconvex network material models.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"
#include "polyflex/datagen.hpp"
#include "polyflex/errors.hpp"
#include "polyflex/loss.hpp"
#include "polyflex/training.hpp"
#include "polyflex/variants.hpp"
#include "polyflex/verify.hpp"

namespace {

using namespace polyflex;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

void apply_thread_cap() {
#ifdef _OPENMP
  if (const char* env = std::getenv("POLYFLEX_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
}

MaterialParams parse_material(const std::string& name, const std::string& params_json) {
  MaterialParams p = default_params(material_from_name(name));
  if (!params_json.empty()) {
    std::ifstream is(params_json);
    if (!is) throw Error("cannot open " + params_json);
    nlohmann::json j = nlohmann::json::parse(is);
    if (j.contains("c1")) p.c1 = j["c1"].get<double>();
    if (j.contains("c2")) p.c2 = j["c2"].get<double>();
    if (j.contains("Im")) p.Im = j["Im"].get<double>();
    if (j.contains("N")) p.N = j["N"].get<double>();
    if (j.contains("a")) p.a = j["a"].get<double>();
  }
  return p;
}

VariantModel load_model_arg(const std::string& arg) {
  if (arg == "mielke-exact") return mielke_exact_network();
  return read_model(arg);
}

struct RangeSpec {
  double start = 0.5;
  double step = 0.1;
  double end = 2.5;
};

RangeSpec parse_range(const std::string& s) {
  RangeSpec r;
  if (std::sscanf(s.c_str(), "%lf:%lf:%lf", &r.start, &r.step, &r.end) != 3 || r.step <= 0.0 ||
      r.end < r.start)
    throw Error("range must be start:step:end with step > 0, got '" + s + "'");
  return r;
}

int cmd_generate(const std::string& model, const std::string& params_json,
                 const std::string& grid, const std::string& out) {
  const MaterialParams p = parse_material(model, params_json);
  std::vector<Tensor3> states;
  bool incompressible = true;
  if (grid == "classical") {
    states = incompressible_loadcases();
  } else if (grid == "inc-mielke") {
    states = inc_mielke_grid();
  } else if (grid == "mielke-compressible") {
    states = mielke_compressible_grid();
    incompressible = false;
  } else {
    throw Error("unknown grid '" + grid + "'");
  }
  const Dataset d = build_dataset(p, states, incompressible);
  write_csv(d, out);
  std::printf("wrote %zu samples to %s\n", d.samples.size(), out.c_str());
  return kExitOk;
}

int cmd_train(const std::string& variant, const std::string& data_path, const std::string& archs,
              int restarts, int max_iter, std::uint64_t seed, bool do_fine_tune,
              const std::string& treloar, std::uint64_t split_seed, const std::string& out_model,
              const std::string& out_report) {
  const VariantKind kind = VariantKind::parse(variant);
  Dataset data;
  if (!treloar.empty())
    data = load_treloar(treloar, split_seed);
  else
    data = read_csv(data_path);

  TrainConfig cfg;
  if (archs.empty()) {
    cfg.architectures = default_architectures(kind.input_size());
  } else {
    std::stringstream ss(archs);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) cfg.architectures.push_back(ArchitectureSpec::parse(tok));
    if (cfg.architectures.empty()) throw Error("no architectures given");
  }
  cfg.restarts = restarts;
  cfg.max_iter = max_iter;
  cfg.base_seed = seed;
  cfg.fine_tune = do_fine_tune;

  TrainResult result = multi_restart(kind, data, cfg);
  const InstanceRecord& best = result.instances[result.best_index];
  std::printf("best instance: arch %s seed %llu train MSE %.3e", best.arch.c_str(),
              static_cast<unsigned long long>(best.seed), best.train_mse);
  if (best.val_mse) std::printf(" val MSE %.3e", *best.val_mse);
  std::printf("\n");

  if (!out_model.empty()) {
    write_model(result.best, out_model);
    std::printf("model written to %s\n", out_model.c_str());
  }
  if (!out_report.empty()) {
    std::ofstream os(out_report);
    if (!os) throw Error("cannot open " + out_report);
    os << report_to_json(kind, cfg, result) << "\n";
    std::printf("report written to %s\n", out_report.c_str());
  }
  return kExitOk;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path) {
  const VariantModel m = load_model_arg(model_path);
  const Dataset d = read_csv(data_path);
  for (const Split s : {Split::Train, Split::Val, Split::Test}) {
    if (d.count(s) == 0) continue;
    std::printf("%s: n=%zu mse=%.3g\n", split_name(s).c_str(), d.count(s), mse_loss(m, d, s));
  }
  return kExitOk;
}

int cmd_verify(const std::string& model_path, const std::string& checks, std::uint64_t seed,
               bool as_json) {
  const VariantModel m = load_model_arg(model_path);
  std::vector<std::string> wanted;
  {
    std::stringstream ss(checks);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) wanted.push_back(tok);
  }
  const std::vector<std::string> known = {"convexity",         "pi3",      "objectivity",
                                          "monotone",          "angular-momentum",
                                          "stress-fd",         "normalized"};
  auto is_known = [&](const std::string& c) {
    for (const auto& k : known)
      if (k == c) return true;
    return false;
  };
  bool all = false;
  for (const auto& c : wanted) {
    if (c == "all") {
      all = true;
      continue;
    }
    if (!is_known(c)) {
      std::fprintf(stderr, "unknown check '%s'; known: all", c.c_str());
      for (const auto& k : known) std::fprintf(stderr, ", %s", k.c_str());
      std::fprintf(stderr, "\n");
      return kExitUsage;
    }
  }
  auto selected = [&](const std::string& c) {
    if (all) return true;
    for (const auto& w : wanted)
      if (w == c) return true;
    return false;
  };

  std::vector<CheckReport> reports;
  if (selected("convexity")) reports.push_back(check_convexity(m, 10000, 1e-10, seed));
  if (selected("pi3")) reports.push_back(check_pi3(m, 1000, 1e-12, seed + 1));
  if (selected("objectivity"))
    reports.push_back(check_objectivity_isotropy(m, 500, 1e-9, seed + 2));
  if (selected("monotone") && m.kind.constrain_wx())
    reports.push_back(check_monotone(m, 500, 1e-10, seed + 3));
  else if (selected("monotone") && !all) {
    std::fprintf(stderr, "monotone applies to ball/uinvar variants only\n");
    return kExitUsage;
  }
  if (selected("angular-momentum"))
    reports.push_back(check_angular_momentum(m, 500, 1e-8, seed + 4));
  if (selected("stress-fd")) reports.push_back(check_stress_fd(m, 100, 1e-6, seed + 5));
  if (selected("normalized")) reports.push_back(check_energy_normalized(m, 1e-12));

  bool ok = true;
  for (const CheckReport& r : reports) {
    ok = ok && r.pass;
    std::printf("%s\n", as_json ? r.to_json().c_str() : r.to_text().c_str());
  }
  return ok ? kExitOk : kExitCheckFailed;
}

int cmd_export_curves(const std::string& model_path, const std::string& reference,
                      const std::string& curve, const std::string& range_s, double lambda2,
                      const std::string& out) {
  if (model_path.empty() && reference.empty())
    throw Error("need --model and/or --reference");
  const RangeSpec range = parse_range(range_s);

  const bool have_model = !model_path.empty();
  VariantModel model;
  if (have_model) model = load_model_arg(model_path);
  const bool have_ref = !reference.empty();
  MaterialParams ref;
  bool ref_incompressible = true;
  if (have_ref) {
    ref = parse_material(reference, "");
    ref_incompressible = reference != "mielke" && reference != "additive-mielke";
  }

  auto state_for = [&](double l) -> Tensor3 {
    if (curve == "uniaxial") return Tensor3::diag(l, 1.0 / std::sqrt(l), 1.0 / std::sqrt(l));
    if (curve == "biaxial") return Tensor3::diag(l, l, 1.0 / (l * l));
    if (curve == "pure-shear") return Tensor3::diag(l, 1.0, 1.0 / l);
    if (curve == "fixed-lambda2") return Tensor3::diag(l, lambda2, 1.0 / (l * lambda2));
    throw Error("unknown curve kind '" + curve + "'");
  };

  std::ofstream os(out);
  if (!os) throw Error("cannot open " + out);
  os << "lambda1";
  const char* cols[4] = {"energy", "P11", "P22", "P33"};
  if (have_model)
    for (const char* c : cols) os << "," << c;
  if (have_ref)
    for (const char* c : cols) os << (have_model ? ",ref_" : ",") << c;
  os << "\n";

  char buf[64];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    os << "," << buf;
  };
  const int n_steps = static_cast<int>(std::floor((range.end - range.start) / range.step + 1e-9));
  for (int i = 0; i <= n_steps; ++i) {
    const double l = range.start + range.step * i;
    const Tensor3 f = state_for(l);
    std::snprintf(buf, sizeof buf, "%.12g", l);
    os << buf;
    if (have_model) {
      const double e = energy(model, f);
      Tensor3 p = stress(model, f);
      if (!model.kind.compressible) p = p - cofactor(f) * solve_pressure(p, f);
      emit(e);
      emit(p(0, 0));
      emit(p(1, 1));
      emit(p(2, 2));
    }
    if (have_ref) {
      emit(ref_energy(ref, f));
      const Tensor3 p = ref_stress(ref, f, ref_incompressible);
      emit(p(0, 0));
      emit(p(1, 1));
      emit(p(2, 2));
    }
    os << "\n";
  }
  std::printf("wrote %d rows to %s\n", n_steps + 1, out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();

  CLI::App app{"polyconvex hyperelastic network models"};
  app.require_subcommand(1);

  // generate-data
  auto* gen = app.add_subcommand("generate-data", "sample a reference model over a load grid");
  std::string gen_model, gen_params, gen_grid = "classical", gen_out;
  gen->add_option("--model", gen_model, "neo-hooke|mooney-rivlin|gent|arruda-boyce|inc-mielke|mielke|additive-mielke")->required();
  gen->add_option("--params-json", gen_params, "JSON file overriding material parameters");
  gen->add_option("--grid", gen_grid, "classical|inc-mielke|mielke-compressible");
  gen->add_option("--out", gen_out, "output dataset CSV")->required();

  // train
  auto* tr = app.add_subcommand("train", "multi-restart training of one variant");
  std::string tr_variant, tr_data, tr_archs, tr_treloar, tr_out_model, tr_out_report;
  int tr_restarts = 30, tr_max_iter = 1000;
  std::uint64_t tr_seed = 0, tr_split_seed = 0;
  bool tr_fine_tune = false;
  tr->add_option("--variant", tr_variant, "cssv|rcssv|ball|uinvar with optional inc- prefix")->required();
  tr->add_option("--data", tr_data, "dataset CSV");
  tr->add_option("--treloar", tr_treloar, "Treloar-format CSV (loadcase,stretch,stress)");
  tr->add_option("--archs", tr_archs, "comma list, e.g. 6-8-1,6-12-8-1 (default: the eight sweep configurations)");
  tr->add_option("--restarts", tr_restarts, "random restarts per architecture");
  tr->add_option("--max-iter", tr_max_iter, "optimizer iteration cap");
  tr->add_option("--seed", tr_seed, "base seed");
  tr->add_option("--split-seed", tr_split_seed, "train/val/test split seed for --treloar");
  tr->add_flag("--fine-tune", tr_fine_tune, "second pass with 100x tighter tolerances");
  tr->add_option("--out-model", tr_out_model, "model JSON output");
  tr->add_option("--out-report", tr_out_report, "training report JSON output");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "masked stress MSE per partition");
  std::string ev_model, ev_data;
  ev->add_option("--model", ev_model, "model JSON (or 'mielke-exact')")->required();
  ev->add_option("--data", ev_data, "dataset CSV")->required();

  // verify
  auto* vf = app.add_subcommand("verify", "run property checks against a model");
  std::string vf_model, vf_checks = "all";
  std::uint64_t vf_seed = 0;
  bool vf_json = false;
  vf->add_option("--model", vf_model, "model JSON (or 'mielke-exact')")->required();
  vf->add_option("--checks", vf_checks, "all or comma list: convexity,pi3,objectivity,monotone,angular-momentum,stress-fd,normalized");
  vf->add_option("--seed", vf_seed, "sampler seed");
  vf->add_flag("--json", vf_json, "JSON reports instead of text");

  // export-curves
  auto* ex = app.add_subcommand("export-curves", "stress/energy curves along a load path");
  std::string ex_model, ex_ref, ex_curve = "uniaxial", ex_range = "0.5:0.1:2.5", ex_out;
  double ex_lambda2 = 1.0;
  ex->add_option("--model", ex_model, "model JSON (or 'mielke-exact')");
  ex->add_option("--reference", ex_ref, "reference material name");
  ex->add_option("--curve", ex_curve, "uniaxial|biaxial|pure-shear|fixed-lambda2");
  ex->add_option("--range", ex_range, "stretch sweep start:step:end");
  ex->add_option("--lambda2", ex_lambda2, "fixed transverse stretch for fixed-lambda2");
  ex->add_option("--out", ex_out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_model, gen_params, gen_grid, gen_out);
    if (tr->parsed()) {
      if (tr_data.empty() == tr_treloar.empty()) {
        std::fprintf(stderr, "train needs exactly one of --data or --treloar\n");
        return kExitUsage;
      }
      return cmd_train(tr_variant, tr_data, tr_archs, tr_restarts, tr_max_iter, tr_seed,
                       tr_fine_tune, tr_treloar, tr_split_seed, tr_out_model, tr_out_report);
    }
    if (ev->parsed()) return cmd_evaluate(ev_model, ev_data);
    if (vf->parsed()) return cmd_verify(vf_model, vf_checks, vf_seed, vf_json);
    if (ex->parsed())
      return cmd_export_curves(ex_model, ex_ref, ex_curve, ex_range, ex_lambda2, ex_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
