#pragma once

#include <stdexcept>
#include <string>

namespace softclt {

// Base of every error the library throws. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data, files or shapes (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

// Tensor shape incompatibility.
class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

// Non-finite values, log of a nonpositive number, divergence (exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Bad configuration or command-line usage (exit code 1).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace softclt
