#pragma once

#include <stdexcept>
#include <string>

namespace pxp {

// Error taxonomy maps onto CLI exit codes: ParamError -> 2,
// NumericError -> 3, IoError / FormatError -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument, shape mismatch, contract violation.
class ParamError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (bad magic, truncated payload, non-finite data).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures: missing file, unwritable directory.
class IoError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown: NaN loss, singular system, divergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace pxp
