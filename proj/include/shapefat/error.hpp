// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace shapefat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible; the message names every shape involved.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or version-mismatched file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or precondition violation on user-supplied values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (NaN loss, singular system).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace shapefat
