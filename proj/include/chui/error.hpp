#pragma once

#include <stdexcept>
#include <string>

namespace chui {

/// Malformed input: bad weights, positions outside the ball, invalid specs.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Evaluation point closer than the guard radius to a charge.
class SingularPointError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InputError(message);
}

}  // namespace chui
