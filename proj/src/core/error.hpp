#pragma once

#include <stdexcept>
#include <string>

namespace schedsyn {

// Malformed or inconsistent input data. CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite losses or otherwise numerically unusable state. Exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace schedsyn
