#pragma once

#include <stdexcept>
#include <string>

namespace rasterfusion {

// Bad input data (malformed files, out-of-range values, inconsistent shapes).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad invocation or run configuration. The CLI maps these to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rasterfusion
