#pragma once

#include <stdexcept>
#include <string>

namespace kmt {

// Bad argument supplied by the caller (maps to exit code 2).
struct InvalidParameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A structural assumption of a model did not hold at runtime.
struct ModelViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// Requested size is beyond what the configured path can handle.
struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A hard pathwise or exact inequality failed.
struct VerificationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Output could not be written (maps to exit code 1).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kmt
