#pragma once

#include <stdexcept>
#include <string>

namespace egoscene {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input data (CSV rows, binary stores, checkpoints).
struct ParseError : Error {
  using Error::Error;
};

// Bad configuration: unknown keys, missing files named by config,
// unmapped rooms, missing participant metadata. CLI maps these to exit 2.
struct ConfigError : Error {
  using Error::Error;
};

// Tensor/layer dimension mismatch.
struct ShapeError : Error {
  using Error::Error;
};

// Filesystem failures (unreadable/unwritable paths).
struct IoError : Error {
  using Error::Error;
};

}  // namespace egoscene
