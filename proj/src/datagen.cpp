// SPDX-License-Identifier: Apache-2.0
#include "polyflex/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "polyflex/errors.hpp"
#include "polyflex/rng.hpp"

namespace polyflex {

std::size_t Dataset::count(Split s) const {
  std::size_t n = 0;
  for (const auto& smp : samples)
    if (smp.split == s) ++n;
  return n;
}

std::string split_name(Split s) {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "?";
}

namespace {

Split split_from_name(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw MalformedCsv("unknown split tag: " + s);
}

// start + k*step over an integer grid to keep the endpoints exact
std::vector<double> steps(int start_milli, int step_milli, int end_milli) {
  std::vector<double> v;
  for (int x = start_milli; x <= end_milli; x += step_milli)
    v.push_back(static_cast<double>(x) / 1000.0);
  return v;
}

}  // namespace

std::vector<Tensor3> incompressible_loadcases() {
  std::vector<Tensor3> f;
  f.push_back(Tensor3::identity());
  for (double l : steps(500, 100, 2500)) {  // uniaxial
    const double t = 1.0 / std::sqrt(l);
    f.push_back(Tensor3::diag(l, t, t));
  }
  for (double l : steps(700, 100, 2000))  // biaxial
    f.push_back(Tensor3::diag(l, l, 1.0 / (l * l)));
  for (double l : steps(500, 100, 2000))  // pure shear
    f.push_back(Tensor3::diag(l, 1.0, 1.0 / l));
  return f;  // 1 + 21 + 14 + 16 = 52
}

std::vector<Tensor3> inc_mielke_grid() {
  const std::vector<double> ls = steps(500, 75, 2000);  // 21 values
  std::vector<Tensor3> f;
  f.reserve(ls.size() * ls.size());
  for (double l1 : ls)
    for (double l2 : ls) f.push_back(Tensor3::diag(l1, l2, 1.0 / (l1 * l2)));
  return f;  // 441
}

std::vector<Tensor3> mielke_compressible_grid() {
  const std::vector<double> ls = steps(600, 200, 2000);  // 8 values
  std::vector<Tensor3> f;
  for (std::size_t i = 0; i < ls.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j)
      for (std::size_t k = 0; k <= j; ++k) f.push_back(Tensor3::diag(ls[i], ls[j], ls[k]));
  return f;  // C(8+2, 3) = 120
}

double solve_pressure(const Tensor3& dpsi_dF, const Tensor3& f) {
  const double scale = std::max(f.max_abs(), 1.0);
  if (!f.is_diagonal(1e-12 * scale)) throw NotDiagonal();
  return f(2, 2) * dpsi_dF(2, 2);
}

Dataset build_dataset(const MaterialParams& params, const std::vector<Tensor3>& loadcases,
                      bool incompressible) {
  Dataset d;
  d.samples.reserve(loadcases.size());
  for (const Tensor3& f : loadcases) {
    Sample s;
    s.F = f;
    s.P = ref_stress(params, f, incompressible);
    d.samples.push_back(s);
  }
  return d;
}

Dataset load_treloar(const std::string& path, std::uint64_t split_seed) {
  std::ifstream is(path);
  if (!is) throw MalformedCsv("cannot open " + path);

  Dataset d;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string kind, stretch_s, stress_s;
    if (!std::getline(ss, kind, ',') || !std::getline(ss, stretch_s, ',') ||
        !std::getline(ss, stress_s, ','))
      throw MalformedCsv("bad row " + std::to_string(lineno) + " in " + path);
    // strip spaces
    auto trim = [](std::string& s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
    };
    trim(kind);
    trim(stretch_s);
    trim(stress_s);
    if (kind == "loadcase") continue;  // header row
    double stretch, stress;
    try {
      stretch = std::stod(stretch_s);
      stress = std::stod(stress_s);
    } catch (const std::exception&) {
      throw MalformedCsv("bad number in row " + std::to_string(lineno) + " of " + path);
    }
    Sample s;
    s.mask = {0, 0, 0, 0, 0, 0, 0, 0, 0};
    const double l = stretch;
    if (kind == "UT") {
      const double t = 1.0 / std::sqrt(l);
      s.F = Tensor3::diag(l, t, t);
      s.mask[0] = 1;
    } else if (kind == "ET") {
      s.F = Tensor3::diag(l, l, 1.0 / (l * l));
      s.mask[0] = 1;
      s.mask[4] = 1;
      s.P(1, 1) = stress;
    } else if (kind == "PS") {
      // uniaxial test of a wide specimen: width stress unknown, masked out
      s.F = Tensor3::diag(l, 1.0, 1.0 / l);
      s.mask[0] = 1;
    } else {
      throw MalformedCsv("unknown loadcase '" + kind + "' in row " + std::to_string(lineno));
    }
    s.P(0, 0) = stress;
    d.samples.push_back(s);
  }

  const std::size_t n = d.samples.size();
  if (n != 56)
    std::cerr << "warning: expected 56 Treloar rows, found " << n << "\n";

  // random 41/10/5 split (scaled proportionally for other row counts)
  std::size_t n_train = 41, n_val = 10;
  if (n != 56) {
    n_train = static_cast<std::size_t>(std::lround(41.0 / 56.0 * static_cast<double>(n)));
    n_val = static_cast<std::size_t>(std::lround(10.0 / 56.0 * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    n_val = std::min(n_val, n - n_train);
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(split_seed);
  rng.shuffle(idx);
  for (std::size_t r = 0; r < n; ++r) {
    Split s = Split::Test;
    if (r < n_train)
      s = Split::Train;
    else if (r < n_train + n_val)
      s = Split::Val;
    d.samples[idx[r]].split = s;
  }
  return d;
}

void write_csv(const Dataset& d, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << "F11,F12,F13,F21,F22,F23,F31,F32,F33,"
        "P11,P12,P13,P21,P22,P23,P31,P32,P33,"
        "m11,m12,m13,m21,m22,m23,m31,m32,m33,split\n";
  char buf[64];
  for (const Sample& s : d.samples) {
    for (double v : s.F.e) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << buf << ",";
    }
    for (double v : s.P.e) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << buf << ",";
    }
    for (int i = 0; i < 9; ++i) os << int(s.mask[static_cast<std::size_t>(i)]) << ",";
    os << split_name(s.split) << "\n";
  }
}

Dataset read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MalformedCsv("cannot open " + path);
  Dataset d;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("F11,", 0) == 0) continue;  // header
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> toks;
    while (std::getline(ss, tok, ',')) toks.push_back(tok);
    if (toks.size() != 28) throw MalformedCsv("expected 28 columns in row " + std::to_string(lineno));
    Sample s;
    try {
      for (int i = 0; i < 9; ++i) s.F.e[static_cast<std::size_t>(i)] = std::stod(toks[static_cast<std::size_t>(i)]);
      for (int i = 0; i < 9; ++i) s.P.e[static_cast<std::size_t>(i)] = std::stod(toks[static_cast<std::size_t>(9 + i)]);
      for (int i = 0; i < 9; ++i)
        s.mask[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::stoi(toks[static_cast<std::size_t>(18 + i)]) != 0);
    } catch (const std::exception&) {
      throw MalformedCsv("bad number in row " + std::to_string(lineno) + " of " + path);
    }
    s.split = split_from_name(toks[27]);
    d.samples.push_back(s);
  }
  return d;
}

}  // namespace polyflex
