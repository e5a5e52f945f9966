#pragma once

#include <stdexcept>
#include <string>

namespace moco {

// Base class for all library errors. CLI maps subclasses to exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed config, invalid option combination, bad flag value.
struct ConfigError : Error {
  using Error::Error;
};

// Unreadable or malformed data file (instance, manifest, checkpoint, heatmap).
struct DataError : Error {
  using Error::Error;
};

// Malformed instance file contents.
struct ParseError : DataError {
  using DataError::DataError;
};

// Checkpoint shape mismatch, bad magic, truncation, CRC failure.
struct CheckpointError : DataError {
  using DataError::DataError;
};

// A numeric invariant failed at runtime (non-finite loss, all ES pairs dropped).
struct NumericError : Error {
  using Error::Error;
};

// A solution failed a feasibility check where a feasible one was required.
struct InfeasibleError : Error {
  using Error::Error;
};

// An API precondition was violated (caller bug, not user input).
struct ContractViolation : Error {
  using Error::Error;
};

}  // namespace moco
