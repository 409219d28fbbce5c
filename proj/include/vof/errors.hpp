#ifndef VOF_ERRORS_HPP
#define VOF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vof {

// Base of every error raised by the library. Precondition violations on
// plain arguments use std::invalid_argument instead.
struct Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ToleranceNotReached : public Error {
  ToleranceNotReached(const std::string &what, double achieved_,
                      double requested_)
      : Error(what + " (achieved " + std::to_string(achieved_) +
              ", requested " + std::to_string(requested_) + ")"),
        achieved(achieved_), requested(requested_) {}

  double achieved;
  double requested;
};

struct DegreeTooLarge : public Error {
  using Error::Error;
};

struct ConstraintViolated : public Error {
  using Error::Error;
};

struct NotPositiveDefinite : public Error {
  using Error::Error;
};

// Raised when an exact Kuf is requested from a family that only admits
// quadrature or Monte Carlo estimates.
struct RequiresMonteCarlo : public Error {
  using Error::Error;
};

struct NonFiniteObjective : public Error {
  using Error::Error;
};

struct ParseError : public Error {
  ParseError(const std::string &what, std::size_t line_)
      : Error(what), line(line_) {}

  std::size_t line;
};

} // namespace vof

#endif
