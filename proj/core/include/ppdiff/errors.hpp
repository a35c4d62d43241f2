#pragma once

#include <stdexcept>
#include <string>

namespace ppdiff {

// Error hierarchy mapped to CLI exit codes: io=2, mask=3, usage=4, numeric=5.
// Precondition violations in library calls throw UsageError unless a more
// specific class applies.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : Error {
  using Error::Error;
};

struct MaskError : Error {
  using Error::Error;
};

struct UsageError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

// Misuse of ordered/unordered domains (e.g. an order-dependent metric on an
// unordered domain). Reported as error class "domain", exit code 4.
struct DomainError : UsageError {
  using UsageError::UsageError;
};

}  // namespace ppdiff
