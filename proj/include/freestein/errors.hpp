#pragma once

#include <stdexcept>
#include <string>

namespace freestein {

// Generator counts, tensor orders or array shapes that do not line up.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain (R <= 0, negative variance, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// A trace or cumulant table is too short for the requested word length.
struct TruncationError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Input violates a documented precondition (non-centered measure, S-letters in legs, ...).
struct PreconditionError : std::logic_error {
    using std::logic_error::logic_error;
};

// Iterative solver stopped without reaching its tolerance.
struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& what, double last_residual)
        : std::runtime_error(what), residual(last_residual) {}
    double residual;
};

// Numerical breakdown (quadrature failure, fixed-point divergence).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace freestein
