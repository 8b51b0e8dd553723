// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "polyflex/datagen.hpp"
#include "polyflex/icnn.hpp"
#include "polyflex/variants.hpp"

namespace polyflex {

/// Masked stress MSE of a model over one partition, evaluated through the
/// public stress path (per-sample pressure from the model's own gradient for
/// incompressible kinds). This is the reporting/evaluation route; training
/// uses the StressLoss kernel below, which must agree with it.
double mse_loss(const VariantModel& m, const Dataset& data, Split split);

/// Sobolev (stress) training objective for one variant kind, architecture and
/// dataset partition:
///   L(theta) = (1/N) sum_i || mask_i (P^NN(F_i; theta) - P_i) ||^2.
///
/// All deformation-dependent quantities (input tuples, their nu-Jacobians,
/// the linear map from dPsi/dnu to the predicted stress components, pressure
/// elimination for incompressible kinds) are precomputed per sample; an
/// evaluation is pure network arithmetic. The gradient is exact: a
/// forward-over-reverse sweep differentiates through the stress (which itself
/// contains the network's input gradient).
///
/// Gradients are accumulated into per-sample slots and reduced in sample
/// order, so results are bitwise identical no matter how many OpenMP threads
/// run the sample loop.
class StressLoss {
 public:
  StressLoss(const VariantKind& kind, const ArchitectureSpec& arch, const Dataset& data,
             Split split);
  ~StressLoss();
  StressLoss(const StressLoss&) = delete;
  StressLoss& operator=(const StressLoss&) = delete;
  StressLoss(StressLoss&&) = default;
  StressLoss& operator=(StressLoss&&) = default;

  int n_params() const { return n_params_; }
  std::size_t sample_count() const { return samples_.size(); }
  const VariantKind& kind() const { return kind_; }
  const ArchitectureSpec& arch() const { return arch_; }

  /// Lower bounds matching the flat parameter layout.
  std::vector<double> lower_bounds() const;

  double value(std::span<const double> theta) const;
  double value_and_gradient(std::span<const double> theta, std::span<double> grad) const;

  /// Serial reference: the same loss recorded on a scalar reverse-mode tape.
  double value_and_gradient_reference(std::span<const double> theta, std::span<double> grad) const;

  /// Enable the OpenMP sample loop (identical results either way).
  void set_parallel(bool on) { parallel_ = on; }

 private:
  struct Scratch;

  struct SampleData {
    std::vector<double> xs;   // n_tuples * a lifted inputs (tuple-major)
    std::vector<double> jac;  // n_tuples * a * 3, d x_m / d nu_k
    // tuple-minor copies so the kernel's inner loops run contiguously over
    // the tuple index
    std::vector<double> xs_t;   // a * n: [m*n + j]
    std::vector<double> jac_t;  // a * 3 * n: [(m*3 + k)*n + j]
    std::array<double, 27> A{};  // 9x3: P_c = sum_k A[3c+k] * dPsi/dnu_k
    std::array<double, 9> p_data{};
    std::array<double, 9> mask{};
  };

  struct Layout {
    std::vector<int> width;    // per layer
    std::vector<int> wx_off;   // -1 when the last Wx is pinned to zero
    std::vector<int> wz_off;   // -1 for layer 0
    std::vector<int> b_off;
    int a = 0;
    int k = 0;
    int n_params = 0;
  };

  double eval(std::span<const double> theta, double* grad) const;
  double eval_sample(std::span<const double> theta, const SampleData& s, double* grad,
                     Scratch& sc) const;

  VariantKind kind_;
  ArchitectureSpec arch_;
  Layout layout_;
  int n_params_ = 0;
  int n_tuples_ = 0;
  int total_hidden_ = 0;
  bool parallel_ = false;
  Activation activation_ = Activation::Softplus;
  std::vector<SampleData> samples_;
  int total_units_hidden() const { return total_hidden_; }

  mutable std::vector<Scratch> scratch_;    // one per OpenMP thread
  mutable std::vector<double> grad_slots_;  // sample-major gradient buffer
  mutable std::vector<double> loss_slots_;
};

}  // namespace polyflex
