#pragma once

#include <stdexcept>
#include <string>

namespace hfringe {

// Invalid physical or configuration input.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical routine failed to reach its requested accuracy.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// A well-posed inversion turned out singular for the given inputs.
class DegenerateError : public std::runtime_error {
 public:
  explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hfringe
