// SPDX-License-Identifier: Apache-2.0
#include "polyflex/loss.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "polyflex/errors.hpp"
#include "polyflex/tape.hpp"

namespace polyflex {

double mse_loss(const VariantModel& m, const Dataset& data, Split split) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const Sample& s : data.samples) {
    if (s.split != split) continue;
    ++n;
    Tensor3 p;
    if (m.kind.compressible) {
      p = stress(m, s.F);
    } else {
      const Tensor3 g = stress(m, s.F);  // also validates det F > 0
      if (std::abs(det(s.F) - 1.0) > 1e-8) throw NotIncompressible();
      p = g - cofactor(s.F) * solve_pressure(g, s.F);
    }
    for (int c = 0; c < 9; ++c) {
      if (!s.mask[static_cast<std::size_t>(c)]) continue;
      const double r = p.e[static_cast<std::size_t>(c)] - s.P.e[static_cast<std::size_t>(c)];
      acc += r * r;
    }
  }
  if (n == 0) return 0.0;
  return acc / static_cast<double>(n);
}

// Per-thread working memory, each buffer unit-major over [unit*n + tuple].
struct StressLoss::Scratch {
  std::vector<double> acc;    // n
  std::vector<double> act;    // total_hidden x n
  std::vector<double> sig;    // total_hidden x n
  std::vector<double> g;      // a x n input gradients
  std::vector<double> delta;  // maxw x n backprop work
  std::vector<double> delta2;
  std::vector<double> adot;  // total_hidden x n tangent state
  std::vector<double> zdot;
  std::vector<double> abar;  // maxw x n adjoints
  std::vector<double> adotbar;
  std::vector<double> zbar;
  std::vector<double> zdotbar;
  std::vector<double> c;  // a x n tangent directions
};

StressLoss::~StressLoss() = default;

namespace {

constexpr double kIncTol = 1e-8;

int total_hidden(const ArchitectureSpec& arch) {
  int t = 0;
  for (int h : arch.hidden) t += h;
  return t;
}

// softplus and sigmoid from a single exp()
inline void softplus_sigmoid(double t, double& sp, double& sg) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    sp = t + std::log1p(e);
    sg = 1.0 / (1.0 + e);
  } else {
    const double e = std::exp(t);
    sp = std::log1p(e);
    sg = e / (1.0 + e);
  }
}

}  // namespace

StressLoss::StressLoss(const VariantKind& kind, const ArchitectureSpec& arch, const Dataset& data,
                       Split split)
    : kind_(kind), arch_(arch) {
  if (arch.input_size != kind.input_size())
    throw ShapeMismatch("architecture input size does not match variant");
  n_tuples_ = kind.tuple_count();

  // flat layout, identical to to_param_vector ordering
  const int k = arch.layer_count();
  layout_.a = arch.input_size;
  layout_.k = k;
  int off = 0;
  for (int i = 0; i < k; ++i) {
    const int w = arch.layer_width(i);
    layout_.width.push_back(w);
    if (kind.zero_last_wx() && i == k - 1) {
      layout_.wx_off.push_back(-1);
    } else {
      layout_.wx_off.push_back(off);
      off += w * layout_.a;
    }
    if (i > 0) {
      layout_.wz_off.push_back(off);
      off += w * arch.layer_width(i - 1);
    } else {
      layout_.wz_off.push_back(-1);
    }
    layout_.b_off.push_back(off);
    off += w;
  }
  layout_.n_params = off;
  n_params_ = off;

  // per-sample precompute
  for (const Sample& smp : data.samples) {
    if (smp.split != split) continue;
    const double j = det(smp.F);
    if (j <= 0.0) throw NonPositiveDet();
    if (!kind.compressible && std::abs(j - 1.0) > kIncTol)
      throw NotIncompressible("incompressible variant on a sample with det F != 1");

    SampleData sd;
    for (int c = 0; c < 9; ++c) {
      sd.p_data[static_cast<std::size_t>(c)] = smp.P.e[static_cast<std::size_t>(c)];
      sd.mask[static_cast<std::size_t>(c)] = smp.mask[static_cast<std::size_t>(c)] ? 1.0 : 0.0;
    }

    std::array<double, 3> nu;
    if (smp.F.is_diagonal()) {
      nu = {smp.F(0, 0), smp.F(1, 1), smp.F(2, 2)};
      if (kind.compressible) {
        sd.A[0 * 3 + 0] = 1.0;
        sd.A[4 * 3 + 1] = 1.0;
        sd.A[8 * 3 + 2] = 1.0;
      } else {
        // pressure eliminated against P33 = 0: P_kk = s_k - (F33/F_kk) s_3
        sd.A[0 * 3 + 0] = 1.0;
        sd.A[0 * 3 + 2] = -smp.F(2, 2) / smp.F(0, 0);
        sd.A[4 * 3 + 1] = 1.0;
        sd.A[4 * 3 + 2] = -smp.F(2, 2) / smp.F(1, 1);
        // row 8 identically zero
      }
    } else {
      if (!kind.compressible)
        throw NotDiagonal("incompressible training needs diagonal states for the pressure solve");
      const SvdTriplet t = svd3(smp.F);
      nu = t.nu.nu;
      for (int kk = 0; kk < 3; ++kk) {
        const std::array<double, 3> uk = {t.r1(0, kk), t.r1(1, kk), t.r1(2, kk)};
        const std::array<double, 3> vk = {t.r2(kk, 0), t.r2(kk, 1), t.r2(kk, 2)};
        const Tensor3 ukvk = outer(uk, vk);
        for (int c = 0; c < 9; ++c) sd.A[static_cast<std::size_t>(c * 3 + kk)] = ukvk.e[static_cast<std::size_t>(c)];
      }
    }
    input_tuples_flat(kind, nu, sd.xs, sd.jac);
    const int a = kind.input_size();
    const int n = kind.tuple_count();
    sd.xs_t.resize(static_cast<std::size_t>(a * n));
    sd.jac_t.resize(static_cast<std::size_t>(a * 3 * n));
    for (int jt = 0; jt < n; ++jt)
      for (int m = 0; m < a; ++m) {
        sd.xs_t[static_cast<std::size_t>(m * n + jt)] = sd.xs[static_cast<std::size_t>(jt * a + m)];
        for (int kk = 0; kk < 3; ++kk)
          sd.jac_t[static_cast<std::size_t>((m * 3 + kk) * n + jt)] =
              sd.jac[static_cast<std::size_t>((jt * a + m) * 3 + kk)];
      }
    samples_.push_back(std::move(sd));
  }

  int n_threads = 1;
#ifdef _OPENMP
  n_threads = omp_get_max_threads();
#endif
  total_hidden_ = total_hidden(arch);
  const int th = total_hidden_;
  const int maxw = [&] {
    int m = 1;
    for (int i = 0; i < k; ++i) m = std::max(m, arch.layer_width(i));
    return m;
  }();
  scratch_.resize(static_cast<std::size_t>(n_threads));
  for (Scratch& sc : scratch_) {
    sc.acc.resize(static_cast<std::size_t>(n_tuples_));
    sc.act.resize(static_cast<std::size_t>(th * n_tuples_));
    sc.sig.resize(static_cast<std::size_t>(th * n_tuples_));
    sc.g.resize(static_cast<std::size_t>(layout_.a * n_tuples_));
    sc.delta.resize(static_cast<std::size_t>(maxw * n_tuples_));
    sc.delta2.resize(static_cast<std::size_t>(maxw * n_tuples_));
    sc.adot.resize(static_cast<std::size_t>(th * n_tuples_));
    sc.zdot.resize(static_cast<std::size_t>(th * n_tuples_));
    sc.abar.resize(static_cast<std::size_t>(maxw * n_tuples_));
    sc.adotbar.resize(static_cast<std::size_t>(maxw * n_tuples_));
    sc.zbar.resize(static_cast<std::size_t>(maxw * n_tuples_));
    sc.zdotbar.resize(static_cast<std::size_t>(maxw * n_tuples_));
    sc.c.resize(static_cast<std::size_t>(layout_.a * n_tuples_));
  }
  grad_slots_.resize(samples_.size() * static_cast<std::size_t>(n_params_));
  loss_slots_.resize(samples_.size());
}

std::vector<double> StressLoss::lower_bounds() const {
  const ICNNParams proto = make_params(arch_, kind_.constrain_wx(), kind_.zero_last_wx(),
                                       kind_.wx_free_cols());
  return to_param_vector(proto).lower;
}

double StressLoss::value(std::span<const double> theta) const {
  return eval(theta, nullptr);
}

double StressLoss::value_and_gradient(std::span<const double> theta,
                                      std::span<double> grad) const {
  if (static_cast<int>(grad.size()) != n_params_) throw ShapeMismatch("gradient size");
  return eval(theta, grad.data());
}

double StressLoss::eval(std::span<const double> theta, double* grad) const {
  if (static_cast<int>(theta.size()) != n_params_) throw ShapeMismatch("theta size");
  const std::size_t n = samples_.size();
  if (n == 0) {
    if (grad != nullptr) std::memset(grad, 0, sizeof(double) * static_cast<std::size_t>(n_params_));
    return 0.0;
  }

#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel_)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    int tid = 0;
#ifdef _OPENMP
    tid = omp_get_thread_num();
#endif
    double* gslot =
        grad != nullptr ? grad_slots_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(n_params_) : nullptr;
    loss_slots_[static_cast<std::size_t>(i)] =
        eval_sample(theta, samples_[static_cast<std::size_t>(i)], gslot, scratch_[static_cast<std::size_t>(tid)]);
  }

  // fixed-order reduction keeps results identical across thread counts
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) loss += loss_slots_[i];
  loss /= static_cast<double>(n);
  if (grad != nullptr) {
    std::memset(grad, 0, sizeof(double) * static_cast<std::size_t>(n_params_));
    for (std::size_t i = 0; i < n; ++i) {
      const double* gi = grad_slots_.data() + i * static_cast<std::size_t>(n_params_);
      for (int p = 0; p < n_params_; ++p) grad[p] += gi[p];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (int p = 0; p < n_params_; ++p) grad[p] *= inv_n;
  }
  return loss;
}

// The whole per-sample computation is batched over the n input tuples: every
// inner loop runs contiguously over the tuple index, so the small per-layer
// matrices see vector-width work regardless of layer size. Buffers are laid
// out unit-major as [unit*n + tuple].
double StressLoss::eval_sample(std::span<const double> theta, const SampleData& s, double* grad,
                               Scratch& sc) const {
  const int a = layout_.a;
  const int k = layout_.k;
  const int n = n_tuples_;
  const double* th = theta.data();
  const double* X = s.xs_t.data();  // a x n
  const bool softplus_act = activation_ == Activation::Softplus;

  if (grad != nullptr)
    std::memset(grad, 0, sizeof(double) * static_cast<std::size_t>(n_params_));

  double* act = sc.act.data();  // total_hidden x n
  double* sig = sc.sig.data();

  // ---- phase A: batched forward ----
  {
    const double* zprev = nullptr;
    int prev_w = 0;
    int ub = 0;  // unit offset of the current hidden block
    for (int i = 0; i < k - 1; ++i) {  // output layer value is never needed
      const int w = layout_.width[static_cast<std::size_t>(i)];
      const int wxo = layout_.wx_off[static_cast<std::size_t>(i)];
      const double* wz = i > 0 ? th + layout_.wz_off[static_cast<std::size_t>(i)] : nullptr;
      const double* b = th + layout_.b_off[static_cast<std::size_t>(i)];
      for (int r = 0; r < w; ++r) {
        double* arow = sc.acc.data();
        for (int t = 0; t < n; ++t) arow[t] = b[r];
        if (wxo >= 0) {
          const double* row = th + wxo + r * a;
          for (int c = 0; c < a; ++c) {
            const double wv = row[c];
            const double* xc = X + c * n;
            for (int t = 0; t < n; ++t) arow[t] += wv * xc[t];
          }
        }
        if (i > 0) {
          const double* row = wz + r * prev_w;
          for (int c = 0; c < prev_w; ++c) {
            const double wv = row[c];
            const double* zc = zprev + c * n;
            for (int t = 0; t < n; ++t) arow[t] += wv * zc[t];
          }
        }
        double* aract = act + (ub + r) * n;
        double* arsig = sig + (ub + r) * n;
        if (softplus_act) {
          for (int t = 0; t < n; ++t) softplus_sigmoid(arow[t], aract[t], arsig[t]);
        } else {
          for (int t = 0; t < n; ++t) {
            aract[t] = arow[t] > 0.0 ? arow[t] : 0.0;
            arsig[t] = arow[t] > 0.0 ? 1.0 : 0.0;
          }
        }
      }
      zprev = act + ub * n;
      prev_w = w;
      ub += w;
    }
  }

  // ---- phase A: batched input-gradient backprop ----
  double* g = sc.g.data();  // a x n
  std::memset(g, 0, sizeof(double) * static_cast<std::size_t>(a * n));
  {
    double* delta = sc.delta.data();    // maxw x n
    double* delta2 = sc.delta2.data();
    for (int t = 0; t < n; ++t) delta[t] = 1.0;  // linear output, width 1
    int ub = total_units_hidden() - (k >= 2 ? layout_.width[static_cast<std::size_t>(k - 2)] : 0);
    for (int i = k - 1; i >= 0; --i) {
      const int w = layout_.width[static_cast<std::size_t>(i)];
      const int wxo = layout_.wx_off[static_cast<std::size_t>(i)];
      if (wxo >= 0) {
        const double* wx = th + wxo;
        for (int r = 0; r < w; ++r) {
          const double* drow = delta + r * n;
          const double* row = wx + r * a;
          for (int c = 0; c < a; ++c) {
            const double wv = row[c];
            if (wv == 0.0) continue;
            double* gc = g + c * n;
            for (int t = 0; t < n; ++t) gc[t] += wv * drow[t];
          }
        }
      }
      if (i == 0) break;
      const int pw = layout_.width[static_cast<std::size_t>(i - 1)];
      const double* wz = th + layout_.wz_off[static_cast<std::size_t>(i)];
      std::memset(delta2, 0, sizeof(double) * static_cast<std::size_t>(pw * n));
      for (int r = 0; r < w; ++r) {
        const double* drow = delta + r * n;
        const double* row = wz + r * pw;
        for (int c = 0; c < pw; ++c) {
          const double wv = row[c];
          double* dc = delta2 + c * n;
          for (int t = 0; t < n; ++t) dc[t] += wv * drow[t];
        }
      }
      const double* sg = sig + ub * n;
      for (int c = 0; c < pw; ++c) {
        double* dc = delta2 + c * n;
        const double* sc2 = sg + c * n;
        for (int t = 0; t < n; ++t) dc[t] *= sc2[t];
      }
      std::swap(delta, delta2);
      ub -= i >= 2 ? layout_.width[static_cast<std::size_t>(i - 2)] : 0;
    }
  }

  // ---- dPsi/dnu and the masked stress residual ----
  double snu[3] = {0.0, 0.0, 0.0};
  {
    const double* J = s.jac_t.data();  // (a*3) x n
    for (int m = 0; m < a; ++m) {
      const double* gm = g + m * n;
      for (int kk = 0; kk < 3; ++kk) {
        const double* jr = J + (m * 3 + kk) * n;
        double acc = 0.0;
        for (int t = 0; t < n; ++t) acc += gm[t] * jr[t];
        snu[kk] += acc;
      }
    }
  }
  const double inv_tuples = 1.0 / static_cast<double>(n);
  snu[0] *= inv_tuples;
  snu[1] *= inv_tuples;
  snu[2] *= inv_tuples;

  double li = 0.0;
  double wv3[3] = {0.0, 0.0, 0.0};
  for (int c = 0; c < 9; ++c) {
    const double mk = s.mask[static_cast<std::size_t>(c)];
    if (mk == 0.0) continue;
    const double pc = s.A[static_cast<std::size_t>(c * 3 + 0)] * snu[0] +
                      s.A[static_cast<std::size_t>(c * 3 + 1)] * snu[1] +
                      s.A[static_cast<std::size_t>(c * 3 + 2)] * snu[2];
    const double r = pc - s.p_data[static_cast<std::size_t>(c)];
    li += r * r;
    const double w2 = 2.0 * r;
    wv3[0] += w2 * s.A[static_cast<std::size_t>(c * 3 + 0)];
    wv3[1] += w2 * s.A[static_cast<std::size_t>(c * 3 + 1)];
    wv3[2] += w2 * s.A[static_cast<std::size_t>(c * 3 + 2)];
  }
  if (grad == nullptr) return li;

  // ---- phase C: d/dtheta of (1/n) sum_t c_t . grad_x NN(x_t), batched ----
  double* cdir = sc.c.data();  // a x n
  {
    const double* J = s.jac_t.data();
    for (int m = 0; m < a; ++m) {
      double* cm = cdir + m * n;
      const double* j0 = J + (m * 3 + 0) * n;
      const double* j1 = J + (m * 3 + 1) * n;
      const double* j2 = J + (m * 3 + 2) * n;
      for (int t = 0; t < n; ++t) cm[t] = j0[t] * wv3[0] + j1[t] * wv3[1] + j2[t] * wv3[2];
    }
  }

  double* adot = sc.adot.data();  // total_hidden x n (output layer not stored)
  double* zdot = sc.zdot.data();
  {
    const double* zprev = nullptr;
    int prev_w = 0;
    int ub = 0;
    for (int i = 0; i < k - 1; ++i) {
      const int w = layout_.width[static_cast<std::size_t>(i)];
      const int wxo = layout_.wx_off[static_cast<std::size_t>(i)];
      const double* wz = i > 0 ? th + layout_.wz_off[static_cast<std::size_t>(i)] : nullptr;
      for (int r = 0; r < w; ++r) {
        double* arow = adot + (ub + r) * n;
        std::memset(arow, 0, sizeof(double) * static_cast<std::size_t>(n));
        if (wxo >= 0) {
          const double* row = th + wxo + r * a;
          for (int c = 0; c < a; ++c) {
            const double wvv = row[c];
            const double* cc = cdir + c * n;
            for (int t = 0; t < n; ++t) arow[t] += wvv * cc[t];
          }
        }
        if (i > 0) {
          const double* row = wz + r * prev_w;
          for (int c = 0; c < prev_w; ++c) {
            const double wvv = row[c];
            const double* zc = zprev + c * n;
            for (int t = 0; t < n; ++t) arow[t] += wvv * zc[t];
          }
        }
        double* zrow = zdot + (ub + r) * n;
        const double* srow = sig + (ub + r) * n;
        for (int t = 0; t < n; ++t) zrow[t] = srow[t] * arow[t];
      }
      zprev = zdot + ub * n;
      prev_w = w;
      ub += w;
    }
  }

  // reverse pass, seeded with 1/n per tuple
  {
    double* abar = sc.abar.data();      // maxw x n
    double* adotbar = sc.adotbar.data();
    double* zbar = sc.zbar.data();
    double* zdotbar = sc.zdotbar.data();
    const double seed = inv_tuples;

    const int last = k - 1;
    if (layout_.wx_off[static_cast<std::size_t>(last)] >= 0) {
      double* gwx = grad + layout_.wx_off[static_cast<std::size_t>(last)];
      for (int c = 0; c < a; ++c) {
        const double* cc = cdir + c * n;
        double acc = 0.0;
        for (int t = 0; t < n; ++t) acc += cc[t];
        gwx[c] += seed * acc;
      }
    }
    if (k == 1) return li;  // purely linear model
    const int pw_last = layout_.width[static_cast<std::size_t>(last - 1)];
    const int hid_base = total_units_hidden() - pw_last;
    {
      const double* wz = th + layout_.wz_off[static_cast<std::size_t>(last)];
      double* gwz = grad + layout_.wz_off[static_cast<std::size_t>(last)];
      for (int c = 0; c < pw_last; ++c) {
        const double* zc = zdot + (hid_base + c) * n;
        double acc = 0.0;
        for (int t = 0; t < n; ++t) acc += zc[t];
        gwz[c] += seed * acc;
        double* zb = zbar + c * n;
        double* zdb = zdotbar + c * n;
        const double sw = seed * wz[c];
        for (int t = 0; t < n; ++t) {
          zb[t] = 0.0;
          zdb[t] = sw;
        }
      }
    }

    int ub = hid_base;
    for (int i = last - 1; i >= 0; --i) {
      const int w = layout_.width[static_cast<std::size_t>(i)];
      for (int r = 0; r < w; ++r) {
        const double* sg = sig + (ub + r) * n;
        const double* ad = adot + (ub + r) * n;
        const double* zb = zbar + r * n;
        const double* zdb = zdotbar + r * n;
        double* ab = abar + r * n;
        double* adb = adotbar + r * n;
        if (softplus_act) {
          for (int t = 0; t < n; ++t) {
            const double sp2 = sg[t] * (1.0 - sg[t]);  // sigma''
            ab[t] = zb[t] * sg[t] + zdb[t] * sp2 * ad[t];
            adb[t] = zdb[t] * sg[t];
          }
        } else {
          for (int t = 0; t < n; ++t) {
            ab[t] = zb[t] * sg[t];
            adb[t] = zdb[t] * sg[t];
          }
        }
      }
      const int wxo = layout_.wx_off[static_cast<std::size_t>(i)];
      if (wxo >= 0) {
        double* gwx = grad + wxo;
        for (int r = 0; r < w; ++r) {
          const double* ab = abar + r * n;
          const double* adb = adotbar + r * n;
          double* row = gwx + r * a;
          for (int c = 0; c < a; ++c) {
            const double* xc = X + c * n;
            const double* cc = cdir + c * n;
            double acc = 0.0;
            for (int t = 0; t < n; ++t) acc += ab[t] * xc[t] + adb[t] * cc[t];
            row[c] += acc;
          }
        }
      }
      {
        double* gb = grad + layout_.b_off[static_cast<std::size_t>(i)];
        for (int r = 0; r < w; ++r) {
          const double* ab = abar + r * n;
          double acc = 0.0;
          for (int t = 0; t < n; ++t) acc += ab[t];
          gb[r] += acc;
        }
      }
      if (i == 0) break;
      const int ppw = layout_.width[static_cast<std::size_t>(i - 1)];
      const int ub_prev = ub - ppw;
      const double* wz = th + layout_.wz_off[static_cast<std::size_t>(i)];
      double* gwz = grad + layout_.wz_off[static_cast<std::size_t>(i)];
      std::memset(zbar, 0, sizeof(double) * static_cast<std::size_t>(ppw * n));
      std::memset(zdotbar, 0, sizeof(double) * static_cast<std::size_t>(ppw * n));
      for (int r = 0; r < w; ++r) {
        const double* ab = abar + r * n;
        const double* adb = adotbar + r * n;
        const double* row = wz + r * ppw;
        double* grow = gwz + r * ppw;
        for (int c = 0; c < ppw; ++c) {
          const double* zin = act + (ub_prev + c) * n;
          const double* zdin = zdot + (ub_prev + c) * n;
          double* zb = zbar + c * n;
          double* zdb = zdotbar + c * n;
          const double wvv = row[c];
          double acc = 0.0;
          for (int t = 0; t < n; ++t) {
            acc += ab[t] * zin[t] + adb[t] * zdin[t];
            zb[t] += wvv * ab[t];
            zdb[t] += wvv * adb[t];
          }
          grow[c] += acc;
        }
      }
      ub = ub_prev;
    }
  }
  return li;
}

double StressLoss::value_and_gradient_reference(std::span<const double> theta,
                                                std::span<double> grad) const {
  if (activation_ != Activation::Softplus)
    throw Error("reference loss supports softplus networks only");
  if (static_cast<int>(theta.size()) != n_params_ || static_cast<int>(grad.size()) != n_params_)
    throw ShapeMismatch("theta/grad size");
  const std::size_t ns = samples_.size();
  std::fill(grad.begin(), grad.end(), 0.0);
  if (ns == 0) return 0.0;

  const int a = layout_.a;
  const int k = layout_.k;
  const int n = n_tuples_;
  Tape tape;
  double loss = 0.0;

  for (const SampleData& s : samples_) {
    tape.clear();
    std::vector<Tape::Var> th(static_cast<std::size_t>(n_params_));
    for (int p = 0; p < n_params_; ++p) th[static_cast<std::size_t>(p)] = tape.input(theta[static_cast<std::size_t>(p)]);

    std::array<Tape::Var, 3> snu = {tape.constant(0.0), tape.constant(0.0), tape.constant(0.0)};

    for (int j = 0; j < n; ++j) {
      const double* x = s.xs.data() + j * a;
      // forward, keeping pre-activation sigmoids for the recorded backprop
      std::vector<std::vector<Tape::Var>> zs(static_cast<std::size_t>(k));
      std::vector<std::vector<Tape::Var>> sigs(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) {
        const int w = layout_.width[static_cast<std::size_t>(i)];
        const int wxo = layout_.wx_off[static_cast<std::size_t>(i)];
        for (int r = 0; r < w; ++r) {
          Tape::Var acc = th[static_cast<std::size_t>(layout_.b_off[static_cast<std::size_t>(i)] + r)];
          if (wxo >= 0)
            for (int cidx = 0; cidx < a; ++cidx)
              acc = tape.add(acc, tape.mul_const(th[static_cast<std::size_t>(wxo + r * a + cidx)], x[cidx]));
          if (i > 0) {
            const int wzo = layout_.wz_off[static_cast<std::size_t>(i)];
            const int pw = layout_.width[static_cast<std::size_t>(i - 1)];
            for (int cidx = 0; cidx < pw; ++cidx)
              acc = tape.add(acc, tape.mul(th[static_cast<std::size_t>(wzo + r * pw + cidx)],
                                           zs[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(cidx)]));
          }
          if (i < k - 1) {
            zs[static_cast<std::size_t>(i)].push_back(tape.softplus_node(acc));
            sigs[static_cast<std::size_t>(i)].push_back(tape.sigmoid_node(acc));
          }
        }
      }

      // recorded input-gradient backprop
      std::vector<Tape::Var> delta = {tape.constant(1.0)};
      std::vector<Tape::Var> g(static_cast<std::size_t>(a), tape.constant(0.0));
      for (int i = k - 1; i >= 0; --i) {
        const int w = layout_.width[static_cast<std::size_t>(i)];
        const int wxo = layout_.wx_off[static_cast<std::size_t>(i)];
        if (wxo >= 0)
          for (int r = 0; r < w; ++r)
            for (int cidx = 0; cidx < a; ++cidx)
              g[static_cast<std::size_t>(cidx)] =
                  tape.add(g[static_cast<std::size_t>(cidx)],
                           tape.mul(delta[static_cast<std::size_t>(r)], th[static_cast<std::size_t>(wxo + r * a + cidx)]));
        if (i == 0) break;
        const int pw = layout_.width[static_cast<std::size_t>(i - 1)];
        const int wzo = layout_.wz_off[static_cast<std::size_t>(i)];
        std::vector<Tape::Var> next(static_cast<std::size_t>(pw), tape.constant(0.0));
        for (int r = 0; r < w; ++r)
          for (int cidx = 0; cidx < pw; ++cidx)
            next[static_cast<std::size_t>(cidx)] =
                tape.add(next[static_cast<std::size_t>(cidx)],
                         tape.mul(delta[static_cast<std::size_t>(r)], th[static_cast<std::size_t>(wzo + r * pw + cidx)]));
        for (int cidx = 0; cidx < pw; ++cidx)
          next[static_cast<std::size_t>(cidx)] = tape.mul(next[static_cast<std::size_t>(cidx)],
                                                          sigs[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(cidx)]);
        delta = std::move(next);
      }

      const double* jc = s.jac.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(a) * 3u;
      for (int m = 0; m < a; ++m)
        for (int kk = 0; kk < 3; ++kk) {
          const double t = jc[m * 3 + kk];
          if (t != 0.0)
            snu[static_cast<std::size_t>(kk)] =
                tape.add(snu[static_cast<std::size_t>(kk)], tape.mul_const(g[static_cast<std::size_t>(m)], t));
        }
    }
    for (auto& sv : snu) sv = tape.mul_const(sv, 1.0 / static_cast<double>(n));

    Tape::Var li = tape.constant(0.0);
    for (int c = 0; c < 9; ++c) {
      if (s.mask[static_cast<std::size_t>(c)] == 0.0) continue;
      Tape::Var pc = tape.constant(0.0);
      for (int kk = 0; kk < 3; ++kk) {
        const double acoef = s.A[static_cast<std::size_t>(c * 3 + kk)];
        if (acoef != 0.0) pc = tape.add(pc, tape.mul_const(snu[static_cast<std::size_t>(kk)], acoef));
      }
      const Tape::Var r = tape.add_const(pc, -s.p_data[static_cast<std::size_t>(c)]);
      li = tape.add(li, tape.square(r));
    }

    tape.backward(li);
    loss += tape.val(li);
    for (int p = 0; p < n_params_; ++p)
      grad[static_cast<std::size_t>(p)] += tape.adjoint(th[static_cast<std::size_t>(p)]);
  }

  const double inv = 1.0 / static_cast<double>(ns);
  loss *= inv;
  for (double& gv : grad) gv *= inv;
  return loss;
}

}  // namespace polyflex
