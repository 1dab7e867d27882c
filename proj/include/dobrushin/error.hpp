#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace dobrushin {

/// Short %g rendering of a double for messages.
inline std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or contract-violating input (bad matrix, mismatched spaces, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Floating-point drift beyond the tolerated budget, e.g. a product kernel
/// whose rows no longer sum to one.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A quantity the computation divides by is zero (variance, coefficient).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace dobrushin
