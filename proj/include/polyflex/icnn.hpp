// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace polyflex {

/// Network shape "a-h1-...-1" (input size, hidden widths, scalar output).
struct ArchitectureSpec {
  int input_size = 0;
  std::vector<int> hidden;

  static ArchitectureSpec parse(const std::string& s);
  std::string str() const;

  int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
  int layer_width(int i) const {
    return i < static_cast<int>(hidden.size()) ? hidden[static_cast<std::size_t>(i)] : 1;
  }
};

enum class Activation : std::uint8_t { Softplus, Relu };

/// Small dense matrix, row-major.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}
  double& operator()(int r, int c) { return v[static_cast<std::size_t>(r * cols + c)]; }
  double operator()(int r, int c) const { return v[static_cast<std::size_t>(r * cols + c)]; }
};

/// Input-convex network parameters:
///   z_{i+1} = g_i(Wz_i z_i + Wx_i x + b_i),  z_0 = 0,  output layer linear.
/// Every Wz entry is constrained non-negative (convexity); with constrain_wx
/// the Wx entries are constrained too except for columns flagged free
/// (the determinant input of compressible Ball/UInvar models, which only
/// need to be non-decreasing in the remaining arguments).
struct ICNNParams {
  ArchitectureSpec arch;
  std::vector<Mat> wx;                 // k matrices, wx[i]: width_i x a
  std::vector<Mat> wz;                 // k matrices, wz[0] unused (empty)
  std::vector<std::vector<double>> b;  // k bias vectors
  bool constrain_wx = false;
  bool zero_last_wx = false;
  std::vector<std::uint8_t> wx_free_cols;  // size a; 1 = exempt from the bound
  Activation activation = Activation::Softplus;

  bool wx_col_constrained(int c) const {
    return constrain_wx &&
           (wx_free_cols.empty() || wx_free_cols[static_cast<std::size_t>(c)] == 0);
  }
};

/// Flat view of all trainable entries plus per-entry lower bound (0 or -inf).
struct ParamVector {
  std::vector<double> value;
  std::vector<double> lower;
};

// Numerically stable softplus / logistic sigmoid.
double softplus(double t);
double sigmoid(double t);

double activate(Activation a, double t);
double activate_derivative(Activation a, double t);

/// Shaped zero-initialized parameter set for the given architecture/flags.
ICNNParams make_params(const ArchitectureSpec& arch, bool constrain_wx, bool zero_last_wx,
                       std::vector<std::uint8_t> wx_free_cols = {},
                       Activation activation = Activation::Softplus);

double forward(const ICNNParams& p, std::span<const double> x);

/// Closed-form backpropagation of d forward / d x.
std::vector<double> input_gradient(const ICNNParams& p, std::span<const double> x);

/// Clamp constrained entries to [0, inf). Idempotent.
void project(ICNNParams& p);

/// Deterministic per-seed initialization: Wx ~ U(-s, s) with
/// s = sqrt(6/(fan_in+fan_out)) times a scale from {1, 2, 5, 10} cycled by
/// seed, absolute value applied to constrained matrices, biases
/// ~ U(-0.1, 0.1). Satisfies all constraints at birth.
ICNNParams init_params(const ArchitectureSpec& arch, bool constrain_wx, bool zero_last_wx,
                       std::vector<std::uint8_t> wx_free_cols, std::uint64_t seed,
                       Activation activation = Activation::Softplus);

// Lossless round-trip between structured params and the flat training vector.
// Ordering per layer i: wx_i row-major (skipped when zeroed), wz_i row-major
// (i >= 1), b_i.
ParamVector to_param_vector(const ICNNParams& p);
void from_param_vector(ICNNParams& p, std::span<const double> values);
int param_count(const ICNNParams& p);

}  // namespace polyflex
