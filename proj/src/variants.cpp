// SPDX-License-Identifier: Apache-2.0
#include "polyflex/variants.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "polyflex/errors.hpp"
#include "polyflex/rng.hpp"

namespace polyflex {

namespace {

// Canonical permutation order: identity, swap(2,3), swap(1,2), cycle (3,1,2),
// cycle (2,3,1), swap(1,3). Tuple indices follow this fixed enumeration.
constexpr int kPerm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {2, 0, 1}, {1, 2, 0}, {2, 1, 0}};
// The four even sign flips, identity first.
constexpr double kReflect[4][3] = {{1, 1, 1}, {-1, -1, 1}, {-1, 1, -1}, {1, -1, -1}};

constexpr double kIncompressibleTol = 1e-8;
constexpr double kDegenerateGap = 1e-8;

// m(v) = (v1, v2, v3, v2 v3, v1 v3, v1 v2 [, v1 v2 v3])
void elementary_polynomials(const double v[3], bool with_det, double* out) {
  out[0] = v[0];
  out[1] = v[1];
  out[2] = v[2];
  out[3] = v[1] * v[2];
  out[4] = v[0] * v[2];
  out[5] = v[0] * v[1];
  if (with_det) out[6] = v[0] * v[1] * v[2];
}

}  // namespace

int VariantKind::input_size() const {
  switch (family) {
    case Family::Cssv:
    case Family::Ball:
      return compressible ? 7 : 6;
    case Family::ReducedCssv:
    case Family::UInvar:
      return compressible ? 3 : 2;
  }
  return 0;
}

int VariantKind::tuple_count() const {
  switch (family) {
    case Family::Cssv:
      return 24;
    case Family::ReducedCssv:
      return 4;
    case Family::Ball:
      return 6;
    case Family::UInvar:
      return 1;
  }
  return 0;
}

std::vector<std::uint8_t> VariantKind::wx_free_cols() const {
  const std::size_t a = static_cast<std::size_t>(input_size());
  std::vector<std::uint8_t> free_cols(a, 0);
  if (constrain_wx() && compressible) free_cols[a - 1] = 1;  // determinant column
  return free_cols;
}

std::string VariantKind::name() const {
  std::string base;
  switch (family) {
    case Family::Cssv:
      base = "cssv";
      break;
    case Family::ReducedCssv:
      base = "rcssv";
      break;
    case Family::Ball:
      base = "ball";
      break;
    case Family::UInvar:
      base = "uinvar";
      break;
  }
  return compressible ? base : "inc-" + base;
}

VariantKind VariantKind::parse(const std::string& s) {
  VariantKind k;
  std::string base = s;
  k.compressible = true;
  if (base.rfind("inc-", 0) == 0) {
    k.compressible = false;
    base = base.substr(4);
  }
  if (base == "cssv")
    k.family = Family::Cssv;
  else if (base == "rcssv")
    k.family = Family::ReducedCssv;
  else if (base == "ball")
    k.family = Family::Ball;
  else if (base == "uinvar")
    k.family = Family::UInvar;
  else
    throw Error("unknown variant: " + s);
  return k;
}

std::vector<std::vector<double>> input_tuples(const VariantKind& kind,
                                              const SignedSingularValues& nu) {
  std::vector<double> xs, jac;
  input_tuples_flat(kind, nu.nu, xs, jac);
  const int a = kind.input_size();
  const int n = kind.tuple_count();
  std::vector<std::vector<double>> out(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    out[static_cast<std::size_t>(j)].assign(xs.begin() + j * a, xs.begin() + (j + 1) * a);
  return out;
}

void input_tuples_flat(const VariantKind& kind, const std::array<double, 3>& nu,
                       std::vector<double>& xs, std::vector<double>& jac) {
  const int a = kind.input_size();
  const int n = kind.tuple_count();
  const bool with_det = kind.compressible;
  xs.assign(static_cast<std::size_t>(n * a), 0.0);
  jac.assign(static_cast<std::size_t>(n * a * 3), 0.0);

  auto X = [&](int j, int m) -> double& { return xs[static_cast<std::size_t>(j * a + m)]; };
  auto J = [&](int j, int m, int k) -> double& {
    return jac[static_cast<std::size_t>((j * a + m) * 3 + k)];
  };

  switch (kind.family) {
    case Family::Cssv: {
      for (int pi = 0; pi < 6; ++pi) {
        for (int ri = 0; ri < 4; ++ri) {
          const int j = 4 * pi + ri;
          double v[3];
          for (int i = 0; i < 3; ++i) v[i] = kReflect[ri][i] * nu[static_cast<std::size_t>(kPerm[pi][i])];
          elementary_polynomials(v, with_det, &X(j, 0));
          // d v_i / d nu_k = eps_i * delta(perm_i, k)
          for (int i = 0; i < 3; ++i) J(j, i, kPerm[pi][i]) = kReflect[ri][i];
          const int pairs[3][2] = {{1, 2}, {0, 2}, {0, 1}};
          for (int m = 0; m < 3; ++m) {
            const int p = pairs[m][0], q = pairs[m][1];
            J(j, 3 + m, kPerm[pi][p]) += kReflect[ri][p] * v[q];
            J(j, 3 + m, kPerm[pi][q]) += kReflect[ri][q] * v[p];
          }
          if (with_det) {
            // v1 v2 v3 = nu1 nu2 nu3 for every even sign flip
            J(j, 6, 0) = nu[1] * nu[2];
            J(j, 6, 1) = nu[0] * nu[2];
            J(j, 6, 2) = nu[0] * nu[1];
          }
        }
      }
      break;
    }
    case Family::ReducedCssv: {
      for (int ri = 0; ri < 4; ++ri) {
        double v[3];
        for (int i = 0; i < 3; ++i) v[i] = kReflect[ri][i] * nu[static_cast<std::size_t>(i)];
        X(ri, 0) = v[0] + v[1] + v[2];
        X(ri, 1) = v[1] * v[2] + v[0] * v[2] + v[0] * v[1];
        for (int k = 0; k < 3; ++k) {
          J(ri, 0, k) = kReflect[ri][k];
          J(ri, 1, k) = kReflect[ri][k] * (X(ri, 0) - v[k]);
        }
        if (with_det) {
          X(ri, 2) = nu[0] * nu[1] * nu[2];
          J(ri, 2, 0) = nu[1] * nu[2];
          J(ri, 2, 1) = nu[0] * nu[2];
          J(ri, 2, 2) = nu[0] * nu[1];
        }
      }
      break;
    }
    case Family::Ball: {
      double lam[3], sgn[3];
      for (int i = 0; i < 3; ++i) {
        lam[i] = std::abs(nu[static_cast<std::size_t>(i)]);
        sgn[i] = nu[static_cast<std::size_t>(i)] < 0.0 ? -1.0 : 1.0;
      }
      for (int pi = 0; pi < 6; ++pi) {
        double v[3];
        for (int i = 0; i < 3; ++i) v[i] = lam[kPerm[pi][i]];
        elementary_polynomials(v, with_det, &X(pi, 0));
        for (int i = 0; i < 3; ++i) J(pi, i, kPerm[pi][i]) = sgn[kPerm[pi][i]];
        const int pairs[3][2] = {{1, 2}, {0, 2}, {0, 1}};
        for (int m = 0; m < 3; ++m) {
          const int p = pairs[m][0], q = pairs[m][1];
          J(pi, 3 + m, kPerm[pi][p]) += sgn[kPerm[pi][p]] * v[q];
          J(pi, 3 + m, kPerm[pi][q]) += sgn[kPerm[pi][q]] * v[p];
        }
        if (with_det) {
          J(pi, 6, 0) = sgn[0] * lam[1] * lam[2];
          J(pi, 6, 1) = sgn[1] * lam[0] * lam[2];
          J(pi, 6, 2) = sgn[2] * lam[0] * lam[1];
        }
      }
      break;
    }
    case Family::UInvar: {
      double lam[3], sgn[3];
      for (int i = 0; i < 3; ++i) {
        lam[i] = std::abs(nu[static_cast<std::size_t>(i)]);
        sgn[i] = nu[static_cast<std::size_t>(i)] < 0.0 ? -1.0 : 1.0;
      }
      X(0, 0) = lam[0] + lam[1] + lam[2];
      X(0, 1) = lam[1] * lam[2] + lam[0] * lam[2] + lam[0] * lam[1];
      for (int k = 0; k < 3; ++k) {
        J(0, 0, k) = sgn[k];
        J(0, 1, k) = sgn[k] * (X(0, 0) - lam[k]);
      }
      if (with_det) {
        X(0, 2) = lam[0] * lam[1] * lam[2];
        J(0, 2, 0) = sgn[0] * lam[1] * lam[2];
        J(0, 2, 1) = sgn[1] * lam[0] * lam[2];
        J(0, 2, 2) = sgn[2] * lam[0] * lam[1];
      }
      break;
    }
  }
}

double energy_from_nu(const VariantModel& m, const SignedSingularValues& nu) {
  const auto tuples = input_tuples(m.kind, nu);
  double sum = 0.0;
  for (const auto& x : tuples) sum += forward(m.params, x);
  return sum / static_cast<double>(tuples.size()) + m.normalization;
}

std::array<double, 3> energy_nu_gradient(const VariantModel& m, const SignedSingularValues& nu) {
  std::vector<double> xs, jac;
  input_tuples_flat(m.kind, nu.nu, xs, jac);
  const int a = m.kind.input_size();
  const int n = m.kind.tuple_count();
  std::array<double, 3> g = {0, 0, 0};
  for (int j = 0; j < n; ++j) {
    const std::span<const double> x(xs.data() + j * a, static_cast<std::size_t>(a));
    const std::vector<double> gx = input_gradient(m.params, x);
    for (int mm = 0; mm < a; ++mm)
      for (int k = 0; k < 3; ++k)
        g[static_cast<std::size_t>(k)] +=
            gx[static_cast<std::size_t>(mm)] * jac[static_cast<std::size_t>((j * a + mm) * 3 + k)];
  }
  for (double& v : g) v /= static_cast<double>(n);
  return g;
}

namespace {

void check_f(const VariantModel& m, const Tensor3& f) {
  if (!f.all_finite()) throw NonFinite();
  const double j = det(f);
  if (j <= 0.0) throw NonPositiveDet();
  if (!m.kind.compressible && std::abs(j - 1.0) > kIncompressibleTol) throw NotIncompressible();
}

}  // namespace

double energy_unchecked(const VariantModel& m, const Tensor3& f) {
  if (f.is_diagonal())
    return energy_from_nu(m, SignedSingularValues{{f(0, 0), f(1, 1), f(2, 2)}});
  return energy_from_nu(m, svd3(f).nu);
}

double energy(const VariantModel& m, const Tensor3& f) {
  check_f(m, f);
  return energy_unchecked(m, f);
}

Tensor3 stress_unchecked(const VariantModel& m, const Tensor3& f) {
  // Diagonal fast path: nu = diag F and dnu_k/dF = e_k (x) e_k. The averaged
  // potential is symmetric in nu, so the formula remains exact even for
  // repeated diagonal entries.
  if (f.is_diagonal()) {
    const SignedSingularValues nu{{f(0, 0), f(1, 1), f(2, 2)}};
    const auto g = energy_nu_gradient(m, nu);
    return Tensor3::diag(g[0], g[1], g[2]);
  }

  SvdTriplet t = svd3(f);
  double gap = std::abs(t.nu.nu[0] - t.nu.nu[1]);
  gap = std::min(gap, std::abs(t.nu.nu[0] - t.nu.nu[2]));
  gap = std::min(gap, std::abs(t.nu.nu[1] - t.nu.nu[2]));
  if (gap < kDegenerateGap) {
    // Repeated singular values: the individual dnu_k/dF do not exist, but the
    // averaged energy is smooth. Perturb by a deterministic 1e-9 diagonal
    // jitter (seeded from the entries of F) and decompose again; the induced
    // stress error is far below the loss tolerances.
    Rng jitter(static_cast<std::uint64_t>(f.frobenius_sq() * 1e6) + 17);
    Tensor3 fp = f;
    for (int i = 0; i < 3; ++i) fp(i, i) += 1e-9 * jitter.uniform(0.5, 1.5);
    t = svd3(fp);
  }

  const auto g = energy_nu_gradient(m, t.nu);
  Tensor3 p = Tensor3::zero();
  for (int k = 0; k < 3; ++k) {
    const std::array<double, 3> uk = {t.r1(0, k), t.r1(1, k), t.r1(2, k)};
    const std::array<double, 3> vk = {t.r2(k, 0), t.r2(k, 1), t.r2(k, 2)};
    p = p + outer(uk, vk) * g[static_cast<std::size_t>(k)];
  }
  return p;
}

Tensor3 stress(const VariantModel& m, const Tensor3& f) {
  if (!f.all_finite()) throw NonFinite();
  if (det(f) <= 0.0) throw NonPositiveDet();
  return stress_unchecked(m, f);
}

Tensor3 stress_incompressible(const VariantModel& m, const Tensor3& f, double pressure) {
  if (!f.all_finite()) throw NonFinite();
  if (std::abs(det(f) - 1.0) > kIncompressibleTol) throw NotIncompressible();
  return stress_unchecked(m, f) - cofactor(f) * pressure;
}

void normalize(VariantModel& m) {
  m.normalization -= energy(m, Tensor3::identity());
}

VariantModel mielke_exact_network() {
  // Six linear forms h_i in the lifted input x = m(nu):
  //   h1 = x1 - x4, h2 = -h1, h3 = x2 - x5, h4 = -h3, h5 = x3 - x6, h6 = -h5.
  // The running maximum L_i = ReLU(L_{i-1} - h_{i+1}) + h_{i+1} folds into
  // width-1 ReLU layers by absorbing the linear-in-x terms into the next
  // layer's Wx row; averaging over the 24 tuples cancels the trailing h6, so
  // the last Wx can stay zero and the average equals
  // max(|nu1 - nu2 nu3|, |nu2 - nu1 nu3|, |nu3 - nu1 nu2|) exactly.
  VariantKind kind{Family::Cssv, true};
  ArchitectureSpec arch;
  arch.input_size = 7;
  arch.hidden = {1, 1, 1, 1, 1};
  ICNNParams p = make_params(arch, false, true, {}, Activation::Relu);

  // h coefficients on (x1..x6); x7 (the determinant) is unused.
  const double h[6][7] = {
      {1, 0, 0, -1, 0, 0, 0},  // h1
      {-1, 0, 0, 1, 0, 0, 0},  // h2
      {0, 1, 0, 0, -1, 0, 0},  // h3
      {0, -1, 0, 0, 1, 0, 0},  // h4
      {0, 0, 1, 0, 0, -1, 0},  // h5
      {0, 0, -1, 0, 0, 1, 0},  // h6
  };
  // layer 0: R1 = ReLU(h1 - h2)
  for (int c = 0; c < 7; ++c) p.wx[0](0, c) = h[0][c] - h[1][c];
  // layer i (1..4): R_{i+1} = ReLU(R_i + h_{i+1} - h_{i+2})
  for (int i = 1; i <= 4; ++i) {
    p.wz[static_cast<std::size_t>(i)](0, 0) = 1.0;
    for (int c = 0; c < 7; ++c)
      p.wx[static_cast<std::size_t>(i)](0, c) = h[i][c] - h[i + 1][c];
  }
  // output layer: z6 = R5 (Wx zeroed; the averaged h6 vanishes over the orbit)
  p.wz[5](0, 0) = 1.0;

  VariantModel m{kind, std::move(p), 0.0};
  return m;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_mat_list(std::ostream& os, const std::vector<Mat>& mats, bool skip_first) {
  os << "[";
  bool first_mat = true;
  for (std::size_t i = skip_first ? 1 : 0; i < mats.size(); ++i) {
    if (!first_mat) os << ",";
    first_mat = false;
    os << "[";
    const Mat& m = mats[i];
    for (int r = 0; r < m.rows; ++r) {
      if (r) os << ",";
      os << "[";
      for (int c = 0; c < m.cols; ++c) {
        if (c) os << ",";
        os << fmt17(m(r, c));
      }
      os << "]";
    }
    os << "]";
  }
  os << "]";
}

}  // namespace

std::string model_to_json(const VariantModel& m) {
  std::ostringstream os;
  os << "{\"variant\":\"" << m.kind.name() << "\",";
  os << "\"arch\":\"" << m.params.arch.str() << "\",";
  os << "\"wx\":";
  write_mat_list(os, m.params.wx, false);
  os << ",\"wz\":";
  write_mat_list(os, m.params.wz, true);
  os << ",\"b\":[";
  for (std::size_t i = 0; i < m.params.b.size(); ++i) {
    if (i) os << ",";
    os << "[";
    for (std::size_t r = 0; r < m.params.b[i].size(); ++r) {
      if (r) os << ",";
      os << fmt17(m.params.b[i][r]);
    }
    os << "]";
  }
  os << "],\"normalization\":" << fmt17(m.normalization);
  if (m.params.activation == Activation::Relu) os << ",\"activation\":\"relu\"";
  os << "}";
  return os.str();
}

VariantModel model_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  VariantModel m;
  m.kind = VariantKind::parse(j.at("variant").get<std::string>());
  const ArchitectureSpec arch = ArchitectureSpec::parse(j.at("arch").get<std::string>());
  if (arch.input_size != m.kind.input_size())
    throw Error("arch input size does not match variant");
  Activation act = Activation::Softplus;
  if (j.contains("activation") && j["activation"].get<std::string>() == "relu")
    act = Activation::Relu;
  m.params = make_params(arch, m.kind.constrain_wx(), m.kind.zero_last_wx(),
                         m.kind.wx_free_cols(), act);
  const auto& wx = j.at("wx");
  const auto& wz = j.at("wz");
  const auto& b = j.at("b");
  const int k = arch.layer_count();
  if (static_cast<int>(wx.size()) != k || static_cast<int>(wz.size()) != k - 1 ||
      static_cast<int>(b.size()) != k)
    throw Error("model json layer count mismatch");
  auto load_mat = [](Mat& dst, const nlohmann::json& src) {
    if (static_cast<int>(src.size()) != dst.rows) throw Error("model json matrix shape mismatch");
    for (int r = 0; r < dst.rows; ++r) {
      if (static_cast<int>(src[static_cast<std::size_t>(r)].size()) != dst.cols)
        throw Error("model json matrix shape mismatch");
      for (int c = 0; c < dst.cols; ++c)
        dst(r, c) = src[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    }
  };
  for (int i = 0; i < k; ++i) load_mat(m.params.wx[static_cast<std::size_t>(i)], wx[static_cast<std::size_t>(i)]);
  for (int i = 1; i < k; ++i) load_mat(m.params.wz[static_cast<std::size_t>(i)], wz[static_cast<std::size_t>(i - 1)]);
  for (int i = 0; i < k; ++i) {
    const auto& bi = b[static_cast<std::size_t>(i)];
    auto& dst = m.params.b[static_cast<std::size_t>(i)];
    if (bi.size() != dst.size()) throw Error("model json bias shape mismatch");
    for (std::size_t r = 0; r < dst.size(); ++r) dst[r] = bi[r].get<double>();
  }
  m.normalization = j.at("normalization").get<double>();
  return m;
}

void write_model(const VariantModel& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << model_to_json(m) << "\n";
}

VariantModel read_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace polyflex
