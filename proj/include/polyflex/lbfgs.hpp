// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace polyflex {

/// Objective callback: returns f(x); fills grad when non-empty.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct OptimizeConfig {
  int max_iter = 1000;
  double grad_tol = 1e-9;   // projected-gradient infinity norm
  double f_tol = 2.2e-9;    // relative objective decrease, over a stall window
  int memory = 20;
  int max_line_search = 60;
  std::function<void(int iter, double f)> on_iterate;  // accepted iterates
};

enum class StopReason : int {
  GradTol,
  FTol,
  MaxIter,
  LineSearchFailure,
};

struct OptimizeResult {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;  // stopped on grad_tol or f_tol
  StopReason reason = StopReason::MaxIter;
};

std::string stop_reason_name(StopReason r);

/// Projected two-loop L-BFGS with gradient-projection active sets and an
/// Armijo backtracking search along the projection arc. Box bounds (entries
/// may be +-inf); every accepted iterate satisfies them exactly and the
/// accepted objective sequence is non-increasing. Returns the best iterate
/// seen when the line search stalls.
OptimizeResult optimize(const Objective& fn, std::span<const double> x0,
                        std::span<const double> lower, std::span<const double> upper,
                        const OptimizeConfig& cfg);

/// Lower bounds only (the network training case).
OptimizeResult optimize(const Objective& fn, std::span<const double> x0,
                        std::span<const double> lower, const OptimizeConfig& cfg);

}  // namespace polyflex
