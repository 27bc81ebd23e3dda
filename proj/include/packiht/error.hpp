#pragma once

#include <stdexcept>
#include <string>

namespace packiht {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input files.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Dimension or index mismatches between arguments.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Numerically degenerate problems (zero step denominators, constant responses).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace packiht
