#pragma once

#include <stdexcept>
#include <string>

namespace iscfnet {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad shapes, axes, or argument values passed to an operation.
struct ArgumentError : Error {
  using Error::Error;
};

// NaN or Inf produced or consumed where a finite value is required.
struct NumericError : Error {
  using Error::Error;
};

// Invalid model or run configuration.
struct ConfigError : Error {
  using Error::Error;
};

// Dataset pairing problems (orphan images or masks).
struct IngestionError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Non-finite training loss.
struct DivergenceError : Error {
  using Error::Error;
};

}  // namespace iscfnet
