#pragma once

#include <stdexcept>
#include <string>

namespace coingp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data does not follow the expected file format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Input data is well formed but violates a domain constraint
/// (separation, dimensions, arity, feasibility).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure; the message carries the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace coingp
