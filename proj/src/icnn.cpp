// SPDX-License-Identifier: Apache-2.0
#include "polyflex/icnn.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "polyflex/errors.hpp"
#include "polyflex/rng.hpp"

namespace polyflex {

ArchitectureSpec ArchitectureSpec::parse(const std::string& s) {
  std::vector<int> sizes;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, '-')) {
    if (tok.empty()) throw Error("bad architecture spec: " + s);
    char* end = nullptr;
    const long v = std::strtol(tok.c_str(), &end, 10);
    if (end == nullptr || *end != '\0' || v <= 0) throw Error("bad architecture spec: " + s);
    sizes.push_back(static_cast<int>(v));
  }
  if (sizes.size() < 2 || sizes.back() != 1) throw Error("bad architecture spec: " + s);
  ArchitectureSpec a;
  a.input_size = sizes.front();
  a.hidden.assign(sizes.begin() + 1, sizes.end() - 1);
  return a;
}

std::string ArchitectureSpec::str() const {
  std::string s = std::to_string(input_size);
  for (int h : hidden) s += "-" + std::to_string(h);
  s += "-1";
  return s;
}

double softplus(double t) {
  // exact to double precision beyond |t| = 30
  return t > 30.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double activate(Activation a, double t) {
  return a == Activation::Softplus ? softplus(t) : (t > 0.0 ? t : 0.0);
}

double activate_derivative(Activation a, double t) {
  return a == Activation::Softplus ? sigmoid(t) : (t > 0.0 ? 1.0 : 0.0);
}

ICNNParams make_params(const ArchitectureSpec& arch, bool constrain_wx, bool zero_last_wx,
                       std::vector<std::uint8_t> wx_free_cols, Activation activation) {
  ICNNParams p;
  p.arch = arch;
  p.constrain_wx = constrain_wx;
  p.zero_last_wx = zero_last_wx;
  p.wx_free_cols = std::move(wx_free_cols);
  p.activation = activation;
  const int k = arch.layer_count();
  p.wx.reserve(static_cast<std::size_t>(k));
  p.wz.reserve(static_cast<std::size_t>(k));
  p.b.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const int w = arch.layer_width(i);
    p.wx.emplace_back(w, arch.input_size);
    p.wz.emplace_back(i == 0 ? Mat() : Mat(w, arch.layer_width(i - 1)));
    p.b.emplace_back(static_cast<std::size_t>(w), 0.0);
  }
  return p;
}

namespace {

void check_input(const ICNNParams& p, std::span<const double> x) {
  if (static_cast<int>(x.size()) != p.arch.input_size)
    throw ShapeMismatch("input size " + std::to_string(x.size()) + " != " +
                        std::to_string(p.arch.input_size));
}

// Forward pass storing pre-activations per layer; returns the scalar output.
double forward_pre(const ICNNParams& p, std::span<const double> x,
                   std::vector<std::vector<double>>& pre) {
  const int k = p.arch.layer_count();
  pre.assign(static_cast<std::size_t>(k), {});
  std::vector<double> z;
  for (int i = 0; i < k; ++i) {
    const int w = p.arch.layer_width(i);
    std::vector<double> a(static_cast<std::size_t>(w), 0.0);
    for (int r = 0; r < w; ++r) {
      double acc = p.b[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)];
      const Mat& wx = p.wx[static_cast<std::size_t>(i)];
      for (int c = 0; c < wx.cols; ++c) acc += wx(r, c) * x[static_cast<std::size_t>(c)];
      if (i > 0) {
        const Mat& wz = p.wz[static_cast<std::size_t>(i)];
        for (int c = 0; c < wz.cols; ++c) acc += wz(r, c) * z[static_cast<std::size_t>(c)];
      }
      a[static_cast<std::size_t>(r)] = acc;
    }
    pre[static_cast<std::size_t>(i)] = a;
    if (i == k - 1) return a[0];  // linear output layer
    z.resize(static_cast<std::size_t>(w));
    for (int r = 0; r < w; ++r) z[static_cast<std::size_t>(r)] = activate(p.activation, a[static_cast<std::size_t>(r)]);
  }
  return 0.0;  // unreachable
}

}  // namespace

double forward(const ICNNParams& p, std::span<const double> x) {
  check_input(p, x);
  std::vector<std::vector<double>> pre;
  return forward_pre(p, x, pre);
}

std::vector<double> input_gradient(const ICNNParams& p, std::span<const double> x) {
  check_input(p, x);
  std::vector<std::vector<double>> pre;
  forward_pre(p, x, pre);

  const int k = p.arch.layer_count();
  std::vector<double> g(static_cast<std::size_t>(p.arch.input_size), 0.0);
  // delta_i = d out / d a_i, walked from the linear output layer downwards
  std::vector<double> delta = {1.0};
  for (int i = k - 1; i >= 0; --i) {
    const Mat& wx = p.wx[static_cast<std::size_t>(i)];
    for (int r = 0; r < wx.rows; ++r)
      for (int c = 0; c < wx.cols; ++c)
        g[static_cast<std::size_t>(c)] += delta[static_cast<std::size_t>(r)] * wx(r, c);
    if (i == 0) break;
    const Mat& wz = p.wz[static_cast<std::size_t>(i)];
    std::vector<double> next(static_cast<std::size_t>(wz.cols), 0.0);
    for (int r = 0; r < wz.rows; ++r)
      for (int c = 0; c < wz.cols; ++c)
        next[static_cast<std::size_t>(c)] += delta[static_cast<std::size_t>(r)] * wz(r, c);
    for (int c = 0; c < wz.cols; ++c)
      next[static_cast<std::size_t>(c)] *=
          activate_derivative(p.activation, pre[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(c)]);
    delta = std::move(next);
  }
  return g;
}

void project(ICNNParams& p) {
  const int k = p.arch.layer_count();
  for (int i = 1; i < k; ++i)
    for (double& v : p.wz[static_cast<std::size_t>(i)].v) v = std::max(v, 0.0);
  if (p.constrain_wx) {
    for (int i = 0; i < k; ++i) {
      Mat& wx = p.wx[static_cast<std::size_t>(i)];
      for (int r = 0; r < wx.rows; ++r)
        for (int c = 0; c < wx.cols; ++c)
          if (p.wx_col_constrained(c)) wx(r, c) = std::max(wx(r, c), 0.0);
    }
  }
  if (p.zero_last_wx)
    for (double& v : p.wx.back().v) v = 0.0;
}

ICNNParams init_params(const ArchitectureSpec& arch, bool constrain_wx, bool zero_last_wx,
                       std::vector<std::uint8_t> wx_free_cols, std::uint64_t seed,
                       Activation activation) {
  ICNNParams p = make_params(arch, constrain_wx, zero_last_wx, std::move(wx_free_cols), activation);
  Rng rng(seed);
  // Restart sweeps cycle through wider first-layer scales: energies with
  // sharp features live in large-weight basins that plain Glorot-scale
  // starts reach only after thousands of iterations, if at all.
  constexpr double kScaleLadder[4] = {1.0, 2.0, 5.0, 10.0};
  const double wx_scale = kScaleLadder[seed % 4];
  const int k = arch.layer_count();
  for (int i = 0; i < k; ++i) {
    Mat& wx = p.wx[static_cast<std::size_t>(i)];
    if (!(zero_last_wx && i == k - 1)) {
      const double s = wx_scale * std::sqrt(6.0 / (wx.cols + wx.rows));
      for (int r = 0; r < wx.rows; ++r)
        for (int c = 0; c < wx.cols; ++c) {
          double v = rng.uniform(-s, s);
          if (p.wx_col_constrained(c)) v = std::abs(v);
          wx(r, c) = v;
        }
    }
    if (i > 0) {
      Mat& wz = p.wz[static_cast<std::size_t>(i)];
      const double s = std::sqrt(6.0 / (wz.cols + wz.rows));
      for (double& v : wz.v) v = std::abs(rng.uniform(-s, s));
    }
    for (double& v : p.b[static_cast<std::size_t>(i)]) v = rng.uniform(-0.1, 0.1);
  }
  return p;
}

int param_count(const ICNNParams& p) {
  const int k = p.arch.layer_count();
  int n = 0;
  for (int i = 0; i < k; ++i) {
    if (!(p.zero_last_wx && i == k - 1))
      n += p.wx[static_cast<std::size_t>(i)].rows * p.wx[static_cast<std::size_t>(i)].cols;
    if (i > 0) n += p.wz[static_cast<std::size_t>(i)].rows * p.wz[static_cast<std::size_t>(i)].cols;
    n += static_cast<int>(p.b[static_cast<std::size_t>(i)].size());
  }
  return n;
}

ParamVector to_param_vector(const ICNNParams& p) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  ParamVector pv;
  pv.value.reserve(static_cast<std::size_t>(param_count(p)));
  pv.lower.reserve(pv.value.capacity());
  const int k = p.arch.layer_count();
  for (int i = 0; i < k; ++i) {
    const Mat& wx = p.wx[static_cast<std::size_t>(i)];
    if (!(p.zero_last_wx && i == k - 1)) {
      for (int r = 0; r < wx.rows; ++r)
        for (int c = 0; c < wx.cols; ++c) {
          pv.value.push_back(wx(r, c));
          pv.lower.push_back(p.wx_col_constrained(c) ? 0.0 : -kInf);
        }
    }
    if (i > 0) {
      for (double v : p.wz[static_cast<std::size_t>(i)].v) {
        pv.value.push_back(v);
        pv.lower.push_back(0.0);
      }
    }
    for (double v : p.b[static_cast<std::size_t>(i)]) {
      pv.value.push_back(v);
      pv.lower.push_back(-kInf);
    }
  }
  return pv;
}

void from_param_vector(ICNNParams& p, std::span<const double> values) {
  if (static_cast<int>(values.size()) != param_count(p))
    throw ShapeMismatch("param vector size mismatch");
  std::size_t at = 0;
  const int k = p.arch.layer_count();
  for (int i = 0; i < k; ++i) {
    Mat& wx = p.wx[static_cast<std::size_t>(i)];
    if (p.zero_last_wx && i == k - 1) {
      for (double& v : wx.v) v = 0.0;
    } else {
      for (double& v : wx.v) v = values[at++];
    }
    if (i > 0)
      for (double& v : p.wz[static_cast<std::size_t>(i)].v) v = values[at++];
    for (double& v : p.b[static_cast<std::size_t>(i)]) v = values[at++];
  }
}

}  // namespace polyflex
