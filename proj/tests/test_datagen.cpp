// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "polyflex/datagen.hpp"
#include "polyflex/errors.hpp"

using namespace polyflex;

namespace {

bool contains_diag(const std::vector<Tensor3>& fs, double a, double b, double c) {
  for (const Tensor3& f : fs)
    if (std::abs(f(0, 0) - a) < 1e-12 && std::abs(f(1, 1) - b) < 1e-12 &&
        std::abs(f(2, 2) - c) < 1e-12)
      return true;
  return false;
}

std::string temp_path(const std::string& name) { return "/tmp/polyflex_test_" + name; }

void write_synthetic_treloar(const std::string& path, int rows) {
  // format fixture only; the stresses are made up
  std::ofstream os(path);
  os << "loadcase,stretch,stress\n";
  int written = 0;
  for (int i = 0; written < rows && i < 1000; ++i) {
    const double l = 1.0 + 0.12 * (i % 25);
    if (written < rows) {
      os << "UT," << 1.0 + 0.25 * (written % 20) << "," << 0.1 * written << "\n";
      ++written;
    }
    if (written < rows && i % 2 == 0) {
      os << "ET," << l << "," << 0.2 * written << "\n";
      ++written;
    }
    if (written < rows && i % 3 == 0) {
      os << "PS," << l << "," << 0.15 * written << "\n";
      ++written;
    }
  }
}

}  // namespace

TEST_CASE("incompressible load cases") {
  const auto fs = incompressible_loadcases();
  CHECK(fs.size() == 52);
  for (const Tensor3& f : fs) {
    CHECK(f.is_diagonal());
    CHECK(det(f) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(contains_diag(fs, 2.0, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)));  // uniaxial l = 2
  CHECK(contains_diag(fs, 2.0, 2.0, 0.25));                                   // biaxial l = 2
  CHECK(contains_diag(fs, 2.0, 1.0, 0.5));                                    // pure shear l = 2
}

TEST_CASE("inc-mielke grid has 441 states") {
  const auto fs = inc_mielke_grid();
  CHECK(fs.size() == 441);
  for (const Tensor3& f : fs) CHECK(det(f) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(contains_diag(fs, 0.5, 0.5, 4.0));
  CHECK(contains_diag(fs, 2.0, 2.0, 0.25));
}

TEST_CASE("compressible mielke grid has 120 ordered states") {
  const auto fs = mielke_compressible_grid();
  CHECK(fs.size() == 120);
  CHECK(contains_diag(fs, 2.0, 0.6, 0.6));
  CHECK_FALSE(contains_diag(fs, 0.6, 2.0, 0.6));  // unsorted duplicate excluded
  for (const Tensor3& f : fs) {
    CHECK(f(0, 0) >= f(1, 1));
    CHECK(f(1, 1) >= f(2, 2));
  }
}

TEST_CASE("solve_pressure") {
  // Neo-Hooke uniaxial: (dPsi/dF)33 = 2 * 2^{-1/2}, F33 = 2^{-1/2} -> p = 1
  const double s = 1.0 / std::sqrt(2.0);
  const MaterialParams nh = default_params(MaterialId::NeoHooke);
  const Tensor3 f = Tensor3::diag(2.0, s, s);
  const Tensor3 g = ref_stress(nh, f, false);
  CHECK(solve_pressure(g, f) == doctest::Approx(1.0).epsilon(1e-14));

  CHECK(solve_pressure(Tensor3::identity() * 0.7, Tensor3::identity()) == doctest::Approx(0.7));

  Tensor3 sheared = Tensor3::identity();
  sheared(0, 1) = 0.2;
  CHECK_THROWS_AS(solve_pressure(Tensor3::identity(), sheared), NotDiagonal);
}

TEST_CASE("build_dataset on the classical grid") {
  const Dataset d =
      build_dataset(default_params(MaterialId::NeoHooke), incompressible_loadcases(), true);
  CHECK(d.samples.size() == 52);
  CHECK(d.count(Split::Train) == 52);
  for (const Sample& s : d.samples) {
    CHECK(std::abs(det(s.F) - 1.0) < 1e-12);
    CHECK(std::abs(s.P(2, 2)) < 1e-10);
    for (auto m : s.mask) CHECK(m == 1);
  }
  // the identity state is stress free
  bool found_identity = false;
  for (const Sample& s : d.samples)
    if ((s.F - Tensor3::identity()).max_abs() == 0.0) {
      found_identity = true;
      CHECK(s.P.max_abs() < 1e-12);
    }
  CHECK(found_identity);
}

TEST_CASE("build_dataset inc-mielke and compressible grids") {
  const Dataset inc =
      build_dataset(default_params(MaterialId::MielkeSmooth), inc_mielke_grid(), true);
  CHECK(inc.samples.size() == 441);
  for (const Sample& s : inc.samples) CHECK(std::abs(s.P(2, 2)) < 1e-10);

  const Dataset comp = build_dataset(default_params(MaterialId::MielkeSmooth),
                                     mielke_compressible_grid(), false);
  CHECK(comp.samples.size() == 120);
}

TEST_CASE("treloar loader") {
  const std::string path = temp_path("treloar.csv");
  write_synthetic_treloar(path, 56);
  const Dataset d = load_treloar(path, 12345);
  CHECK(d.samples.size() == 56);
  CHECK(d.count(Split::Train) == 41);
  CHECK(d.count(Split::Val) == 10);
  CHECK(d.count(Split::Test) == 5);

  // identical split for identical seed
  const Dataset d2 = load_treloar(path, 12345);
  for (std::size_t i = 0; i < d.samples.size(); ++i)
    CHECK(d.samples[i].split == d2.samples[i].split);
  // different seed shuffles differently (with overwhelming probability)
  const Dataset d3 = load_treloar(path, 999);
  bool differs = false;
  for (std::size_t i = 0; i < d.samples.size(); ++i)
    differs = differs || d.samples[i].split != d3.samples[i].split;
  CHECK(differs);

  std::remove(path.c_str());
}

TEST_CASE("treloar load case construction") {
  const std::string path = temp_path("treloar_rows.csv");
  {
    std::ofstream os(path);
    os << "loadcase,stretch,stress\n";
    os << "PS,2.0,1.25\n";
    os << "UT,4.0,3.5\n";
    os << "ET,2.0,2.5\n";
  }
  const Dataset d = load_treloar(path, 1);
  REQUIRE(d.samples.size() == 3);

  const Sample& ps = d.samples[0];
  CHECK((ps.F - Tensor3::diag(2.0, 1.0, 0.5)).max_abs() < 1e-15);
  CHECK(ps.mask == std::array<std::uint8_t, 9>{1, 0, 0, 0, 0, 0, 0, 0, 0});
  CHECK(ps.P(0, 0) == 1.25);
  CHECK(ps.P(1, 1) == 0.0);  // masked-out components carry zero

  const Sample& ut = d.samples[1];
  CHECK(ut.F(0, 0) == 4.0);
  CHECK(ut.F(1, 1) == doctest::Approx(0.5));
  CHECK(ut.mask[0] == 1);
  CHECK(ut.mask[4] == 0);

  const Sample& et = d.samples[2];
  CHECK(et.F(2, 2) == doctest::Approx(0.25));
  CHECK(et.mask[0] == 1);
  CHECK(et.mask[4] == 1);
  CHECK(et.P(1, 1) == 2.5);

  std::remove(path.c_str());
}

TEST_CASE("treloar loader rejects malformed input") {
  const std::string path = temp_path("treloar_bad.csv");
  {
    std::ofstream os(path);
    os << "XX,1.0,0.5\n";
  }
  CHECK_THROWS_AS(load_treloar(path, 1), MalformedCsv);
  {
    std::ofstream os(path);
    os << "UT,abc,0.5\n";
  }
  CHECK_THROWS_AS(load_treloar(path, 1), MalformedCsv);
  CHECK_THROWS_AS(load_treloar(temp_path("missing_file.csv"), 1), MalformedCsv);
  std::remove(path.c_str());
}

TEST_CASE("dataset csv round trip") {
  Dataset d = build_dataset(default_params(MaterialId::MooneyRivlin),
                            incompressible_loadcases(), true);
  d.samples[3].split = Split::Val;
  d.samples[7].split = Split::Test;
  d.samples[9].mask[4] = 0;
  d.samples[9].P(1, 1) = 0.0;

  const std::string path = temp_path("dataset.csv");
  write_csv(d, path);
  const Dataset r = read_csv(path);
  REQUIRE(r.samples.size() == d.samples.size());
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    CHECK(r.samples[i].F.e == d.samples[i].F.e);  // bit-exact
    CHECK(r.samples[i].P.e == d.samples[i].P.e);
    CHECK(r.samples[i].mask == d.samples[i].mask);
    CHECK(r.samples[i].split == d.samples[i].split);
  }
  std::remove(path.c_str());
}

TEST_CASE("empty dataset writes a header-only file") {
  const std::string path = temp_path("empty.csv");
  write_csv(Dataset{}, path);
  std::ifstream is(path);
  std::string line;
  CHECK(std::getline(is, line));
  CHECK(line.rfind("F11,", 0) == 0);
  CHECK_FALSE(std::getline(is, line));
  CHECK(read_csv(path).samples.empty());
  std::remove(path.c_str());
}

TEST_CASE("hand-written csv row parses") {
  const std::string path = temp_path("one_row.csv");
  {
    std::ofstream os(path);
    os << "F11,F12,F13,F21,F22,F23,F31,F32,F33,"
          "P11,P12,P13,P21,P22,P23,P31,P32,P33,"
          "m11,m12,m13,m21,m22,m23,m31,m32,m33,split\n";
    os << "2,0,0,0,1,0,0,0,0.5,3.5,0,0,0,0,0,0,0,0,1,0,0,0,0,0,0,0,0,val\n";
  }
  const Dataset d = read_csv(path);
  REQUIRE(d.samples.size() == 1);
  CHECK(d.samples[0].F(0, 0) == 2.0);
  CHECK(d.samples[0].P(0, 0) == 3.5);
  CHECK(d.samples[0].mask[0] == 1);
  CHECK(d.samples[0].mask[4] == 0);
  CHECK(d.samples[0].split == Split::Val);
  std::remove(path.c_str());
}
