#pragma once

#include <stdexcept>
#include <string>

namespace pfpp {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Argument outside a function's mathematical domain (e.g. y <= 0).
struct DomainError : Error {
    using Error::Error;
};

/// A value left the representable range the evaluation policy allows.
struct RangeError : Error {
    using Error::Error;
};

/// Structurally invalid inputs (bad parameters, malformed files).
struct ValidationError : Error {
    using Error::Error;
};

/// A configured capacity bound would be exceeded.
struct CapacityError : Error {
    using Error::Error;
};

/// A documented precondition of an operation does not hold.
struct PreconditionError : Error {
    using Error::Error;
};

/// Inconsistent or unusable run configuration.
struct ConfigError : Error {
    using Error::Error;
};

/// Input data is outside the function class a solver requires.
struct DomainMismatchError : Error {
    using Error::Error;
};

/// A solver produced output failing its own admissibility gate.
struct SolutionRejectedError : Error {
    using Error::Error;
};

/// Quadrature or iteration failed to converge.
struct NumericalError : Error {
    using Error::Error;
};

/// Replication start value does not match the claim's present value.
struct BudgetMismatchError : Error {
    using Error::Error;
};

/// Operation requires a different solver route than the state carries.
struct UnsupportedRouteError : Error {
    using Error::Error;
};

/// A period solve finished but failed the residual gate.
struct ConstructionFailedError : Error {
    using Error::Error;
};

} // namespace pfpp
