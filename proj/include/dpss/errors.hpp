#pragma once

#include <stdexcept>
#include <string>

namespace dpss {

// Invalid arguments are reported with std::invalid_argument. The types below
// cover the remaining failure classes that callers may want to tell apart.

/// A documented precondition on a numeric parameter does not hold
/// (for example n*q > 1 for the p* family).
class PreconditionViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The parameterized total weight alpha*W + beta is zero, so every inclusion
/// probability is undefined.
class DegenerateQuery : public std::domain_error {
 public:
  DegenerateQuery() : std::domain_error("degenerate query: alpha*W + beta == 0") {}
  using std::domain_error::domain_error;
};

/// The lookup table for the requested (K, m) exceeds the space budget.
class TableTooLarge : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Operation not valid in the current state of a structure (e.g. querying an
/// empty reference structure).
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace dpss
