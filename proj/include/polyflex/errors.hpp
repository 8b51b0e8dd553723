// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace polyflex {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonFinite : Error {
  explicit NonFinite(const std::string& msg = "non-finite tensor entry") : Error(msg) {}
};

struct DegenerateSpectrum : Error {
  explicit DegenerateSpectrum(const std::string& msg = "repeated singular values") : Error(msg) {}
};

struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& msg = "shape mismatch") : Error(msg) {}
};

struct NonPositiveDet : Error {
  explicit NonPositiveDet(const std::string& msg = "det F must be positive") : Error(msg) {}
};

struct NotIncompressible : Error {
  explicit NotIncompressible(const std::string& msg = "det F must equal 1") : Error(msg) {}
};

struct NotDiagonal : Error {
  explicit NotDiagonal(const std::string& msg = "tensor must be diagonal") : Error(msg) {}
};

struct MalformedCsv : Error {
  explicit MalformedCsv(const std::string& msg = "malformed csv") : Error(msg) {}
};

struct GentLockingExceeded : Error {
  explicit GentLockingExceeded(const std::string& msg = "Gent locking stretch exceeded") : Error(msg) {}
};

struct WrongVariant : Error {
  explicit WrongVariant(const std::string& msg = "check not applicable to this variant") : Error(msg) {}
};

struct LineSearchFailure : Error {
  explicit LineSearchFailure(const std::string& msg = "line search failed") : Error(msg) {}
};

}  // namespace polyflex
