// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "polyflex/errors.hpp"
#include "polyflex/kinematics.hpp"
#include "polyflex/rng.hpp"
#include "polyflex/verify.hpp"

using namespace polyflex;

namespace {

Tensor3 reconstruct(const SvdTriplet& t) {
  return t.r1 * Tensor3::diag(t.nu.nu[0], t.nu.nu[1], t.nu.nu[2]) * t.r2;
}

double orthogonality_defect(const Tensor3& r) {
  return (r.transposed() * r - Tensor3::identity()).max_abs();
}

Tensor3 random_f(Rng& rng, double lo = -1.5, double hi = 1.5) {
  Tensor3 f;
  for (double& v : f.e) v = rng.uniform(lo, hi);
  return f;
}

}  // namespace

TEST_CASE("svd3 identity") {
  const SvdTriplet t = svd3(Tensor3::identity());
  CHECK((t.r1 - Tensor3::identity()).max_abs() < 1e-14);
  CHECK((t.r2 - Tensor3::identity()).max_abs() < 1e-14);
  for (double v : t.nu.nu) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("svd3 positive diagonal") {
  const SvdTriplet t = svd3(Tensor3::diag(2.0, 1.0, 0.5));
  CHECK(t.nu.nu[0] == doctest::Approx(2.0));
  CHECK(t.nu.nu[1] == doctest::Approx(1.0));
  CHECK(t.nu.nu[2] == doctest::Approx(0.5));
  CHECK((reconstruct(t) - Tensor3::diag(2.0, 1.0, 0.5)).max_abs() < 1e-12);
}

TEST_CASE("svd3 rotated diagonal reconstructs") {
  Rng rng(7);
  const Tensor3 q = random_rotation(rng);
  const Tensor3 f = q * Tensor3::diag(2.0, 1.0, 0.5);
  const SvdTriplet t = svd3(f);
  // nu is a permutation of (2, 1, 0.5), all positive
  double sorted[3] = {t.nu.nu[0], t.nu.nu[1], t.nu.nu[2]};
  std::sort(sorted, sorted + 3);
  CHECK(sorted[0] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(sorted[1] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(sorted[2] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK((reconstruct(t) - f).max_abs() < 1e-10 * f.max_abs());
}

TEST_CASE("svd3 properties over random tensors") {
  Rng rng(11);
  int done = 0;
  while (done < 10000) {
    const Tensor3 f = random_f(rng);
    const double j = det(f);
    if (j <= 1e-3) continue;  // property targets det F > 0
    ++done;
    const SvdTriplet t = svd3(f);
    CHECK(t.nu.product() == doctest::Approx(j).epsilon(1e-10));
    CHECK((reconstruct(t) - f).max_abs() <= 1e-10 * std::max(1.0, f.max_abs()));
    CHECK(orthogonality_defect(t.r1) < 1e-10);
    CHECK(orthogonality_defect(t.r2) < 1e-10);
    CHECK(det(t.r1) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(det(t.r2) == doctest::Approx(1.0).epsilon(1e-10));
    for (double v : t.nu.nu) CHECK(v > 0.0);
  }
}

TEST_CASE("svd3 negative determinant flips exactly one sign") {
  Rng rng(13);
  int done = 0;
  while (done < 200) {
    const Tensor3 f = random_f(rng);
    const double j = det(f);
    if (j >= -1e-3) continue;
    ++done;
    const SvdTriplet t = svd3(f);
    int negatives = 0;
    for (double v : t.nu.nu) negatives += v < 0.0 ? 1 : 0;
    CHECK(negatives == 1);
    CHECK(t.nu.product() == doctest::Approx(j).epsilon(1e-10));
    CHECK((reconstruct(t) - f).max_abs() <= 1e-10 * std::max(1.0, f.max_abs()));
  }
}

TEST_CASE("svd3 rejects non-finite input") {
  Tensor3 f = Tensor3::identity();
  f(1, 2) = std::nan("");
  CHECK_THROWS_AS(svd3(f), NonFinite);
}

TEST_CASE("signed singular values examples") {
  const auto nu = signed_singular_values(Tensor3::diag(1.2, 1.0, 1.0 / 1.2));
  CHECK(nu.nu[0] == doctest::Approx(1.2));
  CHECK(nu.nu[1] == doctest::Approx(1.0));
  CHECK(nu.nu[2] == doctest::Approx(1.0 / 1.2));

  Rng rng(17);
  const Tensor3 q = random_rotation(rng);
  const Tensor3 f = q * Tensor3::diag(2.0, 1.0, 0.5) * q.transposed();
  CHECK(signed_singular_values(f).product() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("dnu_dF diagonal case") {
  const auto d = dnu_dF(Tensor3::diag(2.0, 1.0, 0.5));
  Tensor3 e11 = Tensor3::zero();
  e11(0, 0) = 1.0;
  CHECK((d[0] - e11).max_abs() < 1e-12);
}

TEST_CASE("dnu_dF refuses repeated singular values") {
  CHECK_THROWS_AS(dnu_dF(Tensor3::identity()), DegenerateSpectrum);
}

TEST_CASE("dnu_dF matches central finite differences") {
  Rng rng(19);
  const double h = 1e-6;
  int done = 0;
  while (done < 1000) {
    const Tensor3 f = random_f(rng);
    if (det(f) <= 1e-3) continue;
    const auto nu = signed_singular_values(f);
    const double gap = std::min({std::abs(nu.nu[0] - nu.nu[1]), std::abs(nu.nu[0] - nu.nu[2]),
                                 std::abs(nu.nu[1] - nu.nu[2])});
    if (gap < 1e-3) continue;
    ++done;
    const auto d = dnu_dF(f);
    double max_rel = 0.0;
    for (int c = 0; c < 9; ++c) {
      Tensor3 fp = f, fm = f;
      fp.e[static_cast<std::size_t>(c)] += h;
      fm.e[static_cast<std::size_t>(c)] -= h;
      const auto np = signed_singular_values(fp);
      const auto nm = signed_singular_values(fm);
      for (int k = 0; k < 3; ++k) {
        const double fd = (np.nu[static_cast<std::size_t>(k)] - nm.nu[static_cast<std::size_t>(k)]) / (2.0 * h);
        const double an = d[static_cast<std::size_t>(k)].e[static_cast<std::size_t>(c)];
        max_rel = std::max(max_rel, std::abs(fd - an) / std::max(1.0, std::abs(an)));
      }
    }
    CHECK(max_rel < 1e-6);
  }
}

TEST_CASE("cofactor and determinant") {
  CHECK((cofactor(Tensor3::identity()) - Tensor3::identity()).max_abs() == 0.0);
  CHECK(det(Tensor3::identity()) == 1.0);

  const Tensor3 d = Tensor3::diag(2.0, 1.0, 0.5);
  CHECK((cofactor(d) - Tensor3::diag(0.5, 1.0, 2.0)).max_abs() < 1e-15);
  CHECK(det(d) == doctest::Approx(1.0));

  Rng rng(23);
  for (int it = 0; it < 1000; ++it) {
    const Tensor3 f = random_f(rng);
    const Tensor3 lhs = f * cofactor(f).transposed();
    CHECK((lhs - Tensor3::identity() * det(f)).max_abs() < 1e-10);
  }
}

TEST_CASE("stretch invariants") {
  const auto i1 = stretch_invariants(SignedSingularValues{{1, 1, 1}});
  CHECK(i1[0] == 3.0);
  CHECK(i1[1] == 3.0);
  CHECK(i1[2] == 1.0);

  const auto i2 = stretch_invariants(SignedSingularValues{{2, 1, 0.5}});
  CHECK(i2[0] == doctest::Approx(3.5));
  CHECK(i2[1] == doctest::Approx(3.5));
  CHECK(i2[2] == doctest::Approx(1.0));

  const auto i3 = stretch_invariants(SignedSingularValues{{-1, -1, 1}});
  CHECK(i3[0] == 3.0);
  CHECK(i3[1] == 3.0);
  CHECK(i3[2] == 1.0);
}

TEST_CASE("stretch invariants are exactly Pi3 invariant") {
  static constexpr int kPerm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                      {2, 0, 1}, {1, 2, 0}, {2, 1, 0}};
  static constexpr double kReflect[4][3] = {{1, 1, 1}, {-1, -1, 1}, {-1, 1, -1}, {1, -1, -1}};
  Rng rng(29);
  for (int it = 0; it < 200; ++it) {
    const SignedSingularValues nu{{rng.uniform(0.4, 2.6), rng.uniform(0.4, 2.6), rng.uniform(0.4, 2.6)}};
    const auto base = stretch_invariants(nu);
    for (const auto& p : kPerm)
      for (const auto& e : kReflect) {
        const SignedSingularValues t{{e[0] * nu.nu[static_cast<std::size_t>(p[0])],
                                      e[1] * nu.nu[static_cast<std::size_t>(p[1])],
                                      e[2] * nu.nu[static_cast<std::size_t>(p[2])]}};
        const auto got = stretch_invariants(t);
        CHECK(got[0] == base[0]);
        CHECK(got[1] == doctest::Approx(base[1]).epsilon(1e-15));
        CHECK(got[2] == doctest::Approx(base[2]).epsilon(1e-15));
      }
  }
}

TEST_CASE("cauchy-green invariants") {
  const auto i0 = cauchy_green_invariants(Tensor3::identity());
  CHECK(i0[0] == 3.0);
  CHECK(i0[1] == 3.0);

  const double s = 1.0 / std::sqrt(2.0);
  const auto i1 = cauchy_green_invariants(Tensor3::diag(2.0, s, s));
  CHECK(i1[0] == doctest::Approx(5.0));

  Rng rng(31);
  const auto iq = cauchy_green_invariants(random_rotation(rng));
  CHECK(iq[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(iq[1] == doctest::Approx(3.0).epsilon(1e-12));
}
