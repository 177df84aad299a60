#pragma once

#include <stdexcept>
#include <string>

namespace risklab {

/// Raised when two objects living on finite spaces disagree on the number of atoms.
class DimensionMismatch : public std::invalid_argument {
public:
    DimensionMismatch(std::size_t expected, std::size_t actual)
        : std::invalid_argument("dimension mismatch: expected " + std::to_string(expected) +
                                " atoms, got " + std::to_string(actual)) {}
};

/// A solver or search refused to run (or stopped) because its work budget was exceeded.
class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Some agent's conjugate at the proposed measure exceeds the proposed bound.
class CertificateInvalid : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An internal consistency check failed. Never expected in correct operation.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace risklab
