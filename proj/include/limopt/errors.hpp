#pragma once

#include <stdexcept>

namespace limopt {

// Usage errors (bad arguments, violated preconditions) are thrown as
// std::invalid_argument. The remaining error kinds get their own types so
// callers and the C boundary can tell them apart.

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace limopt
