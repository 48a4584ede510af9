#pragma once

#include <stdexcept>
#include <string>

namespace ccm {

// Shape, symmetry, or argument contract violated by the caller.
struct ContractViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Matrix numerically singular (pivot or column norm below tolerance).
struct SingularMatrix : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Evaluation left the representable numeric domain (NaN/inf or an
// argument outside the region a formula is valid on).
struct NumericDomain : std::domain_error {
  using std::domain_error::domain_error;
};

// Requested an operation outside what the component supports
// (e.g. analytic constants for an architecture that has none).
struct UnsupportedOperation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file. `offset` is the byte position when known, -1 otherwise.
struct ParseError : std::runtime_error {
  long offset;
  ParseError(const std::string& what, long byte_offset = -1)
      : std::runtime_error(what), offset(byte_offset) {}
};

}  // namespace ccm
