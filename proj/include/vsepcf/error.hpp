#pragma once

#include <stdexcept>
#include <string>

namespace vsepcf {

/// Bad input: malformed patterns, out-of-range arguments, missing intensities.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed (non-convergence, non-finite result).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The variational system A is not safely invertible. Usually means the
/// truncation K is too large for the number of pairs available.
class SingularSystem : public NumericalError {
public:
  SingularSystem(const std::string& what, double condition)
      : NumericalError(what), condition_(condition) {}

  double condition() const noexcept { return condition_; }

private:
  double condition_;
};

}  // namespace vsepcf
