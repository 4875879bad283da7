#pragma once

#include <stdexcept>
#include <string>

namespace qpe {

// Bad input: a precondition of the public contract does not hold.
class ValidationError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// A numerical post-condition could not be met (e.g. a quadrature window too
// narrow for the Parseval check, or a decomposition failing reconstruction).
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace qpe
