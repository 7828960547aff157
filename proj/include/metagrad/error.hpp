#pragma once

#include <stdexcept>
#include <string>

namespace metagrad {

// Base class for all library errors. The CLI maps each category to a distinct
// exit message, so prefer the most specific subclass when throwing.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Tensor/parameter dimension mismatches.
struct ShapeError : Error {
  using Error::Error;
};

// Bad argument values (out-of-range labels, empty inputs, invalid settings).
struct ValueError : Error {
  using Error::Error;
};

// Non-finite losses, gradients, or parameters.
struct NumericError : Error {
  using Error::Error;
};

// Config parse or validation failures.
struct ConfigError : Error {
  using Error::Error;
};

// File read/write failures, including corrupt checkpoints.
struct IoError : Error {
  using Error::Error;
};

// Checkpoint written by an incompatible format version.
struct CheckpointVersionError : IoError {
  using IoError::IoError;
};

}  // namespace metagrad
