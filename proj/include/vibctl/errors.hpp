#pragma once

#include <stdexcept>
#include <string>

namespace vibctl {

/// Bad arguments, malformed files, violated preconditions.
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical kernel did not reach its accuracy contract.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An invariant of the optimizer itself broke (e.g. a monotonicity violation).
/// Indicates a bug or an accuracy setting that is too loose, never bad input.
class AlgorithmFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vibctl
