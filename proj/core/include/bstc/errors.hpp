#pragma once

#include <stdexcept>
#include <string>

namespace bstc {

/// Bad input: malformed files, invalid configuration values, violated
/// preconditions on user-supplied data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not proceed (non-positive pivot, non-finite
/// value). Distinct from InputError so callers can map it to its own exit code.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bstc
