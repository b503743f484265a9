#pragma once

#include <stdexcept>
#include <string>

namespace maskfe {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes for an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed input files, schema mismatches, bad checkpoints.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values during a forward pass or optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace maskfe
