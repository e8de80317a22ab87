#pragma once

#include <stdexcept>
#include <string>

namespace srlkit {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape/dimension mismatch in a tensor operation.
struct DimError : Error {
  using Error::Error;
};

// Malformed input file; message carries the location.
struct ParseError : Error {
  using Error::Error;
};

// Invalid run configuration, detected before any side effect.
struct ConfigError : Error {
  using Error::Error;
};

// Numerical failure during optimization (NaN/Inf gradients, diverged loss).
struct TrainError : Error {
  using Error::Error;
};

// Filesystem / serialization failure.
struct IoError : Error {
  using Error::Error;
};

}  // namespace srlkit
