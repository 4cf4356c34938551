#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tilted {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// An exponent denominator would exceed the configured cap p^D.
class CapExceeded : public Error {
  public:
    using Error::Error;
};

/// Inversion of a series whose minimal valuation is attained by two or more
/// monomials.
class NonDominantLeading : public Error {
  public:
    using Error::Error;
};

class ZeroDivisor : public Error {
  public:
    using Error::Error;
};

/// Operands built over different (p, D).
class RingMismatch : public Error {
  public:
    using Error::Error;
};

/// The known p-adic digits of a group element do not determine the action
/// to the requested precision.
class InsufficientGroupAccuracy : public Error {
  public:
    using Error::Error;
};

/// A result was requested beyond the precision available in the inputs.
class PrecisionExhausted : public Error {
  public:
    using Error::Error;
};

/// Every measured orbit difference vanishes to precision.
class DegenerateOrbit : public Error {
  public:
    using Error::Error;
};

class PreconditionViolated : public Error {
  public:
    using Error::Error;
};

class NonConvergence : public Error {
  public:
    using Error::Error;
};

class ParseError : public Error {
  public:
    ParseError(const std::string &what, std::size_t position)
        : Error(what + " at position " + std::to_string(position)), position_(position) {}

    [[nodiscard]] std::size_t position() const noexcept { return position_; }

  private:
    std::size_t position_;
};

} // namespace tilted
