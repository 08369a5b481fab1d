#pragma once

#include <stdexcept>
#include <string>

namespace termincome {

/// Base class for all domain errors thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// The market/preference constants admit no finite value function (K <= 0).
struct WellPosednessError : Error {
    using Error::Error;
};

/// The market price of risk is zero; the value ODE loses its second-order term.
struct DegenerateMarketError : Error {
    using Error::Error;
};

/// The curvature denominator vanished during integration.
struct SingularDenominatorError : Error {
    using Error::Error;
};

/// The backward integration left the overflow guard before reaching zero wealth.
struct SolverBlowupError : Error {
    using Error::Error;
};

/// A structural invariant of a computed solution failed (reported with node index).
struct InvariantViolationError : Error {
    using Error::Error;
};

/// A requested range (e.g. dual grid) is empty or out of bounds.
struct EmptyRangeError : Error {
    using Error::Error;
};

/// Bad simulation or run configuration.
struct ConfigError : Error {
    using Error::Error;
};

/// Problems reading a config file (syntax, unknown keys).
struct ParseError : Error {
    using Error::Error;
};

/// A config value violates a model invariant.
struct ValidationError : Error {
    using Error::Error;
};

}  // namespace termincome
