#pragma once

#include <stdexcept>
#include <string>

namespace lgrowth {

// Invalid user input: malformed files, bad configuration, inconsistent shapes.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown inside the sampler (non-SPD precision, singular blocks).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem and serialization failures.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lgrowth
