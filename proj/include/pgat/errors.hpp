#pragma once

#include <stdexcept>
#include <string>

namespace pgat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyper-parameter, descriptor or config value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. backward on a consumed graph.
class UsageError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content (bad magic, bad checksum, bad record size).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File shorter than its header claims.
class LengthError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// NaN or Inf encountered where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace pgat
