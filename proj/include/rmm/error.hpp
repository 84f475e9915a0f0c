#pragma once

#include <stdexcept>
#include <string>

namespace rmm {

/// Input outside the mathematical domain of an operation (non-finite values,
/// probabilities on the boundary, non-positive prices, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Operation requires time to expiry and the pool or option has none left.
class ExpiryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A trade would push the risky reserve out of the representable band.
class LiquidityBoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A function evaluation produced a non-finite value.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double abscissa)
        : std::runtime_error(what + " at x=" + std::to_string(abscissa)), abscissa_(abscissa) {}

    [[nodiscard]] double abscissa() const noexcept { return abscissa_; }

private:
    double abscissa_;
};

/// A construction whose cost formula has no positive solution.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Binary shorts must be opened as a matched pair on one LPT.
class CoincidenceOfWantsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An option priced to a non-positive value where the hedge divides by it.
class DegenerateOptionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration or user input (maps to exit code 2 in the CLI).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace rmm
