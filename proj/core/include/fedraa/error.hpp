#pragma once

#include <stdexcept>
#include <string>

namespace fedraa {

// Bad user-supplied configuration: wrong key, wrong range, unnormalized ratios.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A requested partition cannot give every fragment at least one unit.
struct InfeasiblePartition : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The delay bound K leaves some client (or fragment) with no feasible pairing.
struct InfeasibleAssignment : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/Inf appeared in a numeric pipeline; message names the failing step.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed binary input; message carries the byte offset.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller broke an API contract (length mismatch and the like).
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace fedraa
