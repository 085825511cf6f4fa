#pragma once

#include <stdexcept>
#include <string>

namespace gridvolterra {

/// Base class for all gridvolterra errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- grid construction ----
struct CycleDetected : Error {
    using Error::Error;
};
struct DisconnectedBus : Error {
    using Error::Error;
};
struct DuplicateChild : Error {
    using Error::Error;
};
struct BadIndex : Error {
    using Error::Error;
};
struct ZeroImpedance : Error {
    using Error::Error;
};
struct SingularIncidence : Error {
    using Error::Error;
};

// ---- power flow ----
struct NoConvergence : Error {
    NoConvergence(int iterations_, double residual_, const std::string& msg)
        : Error(msg), iterations(iterations_), residual(residual_) {}
    int iterations;
    double residual;
};
struct NonPositiveVoltage : Error {
    using Error::Error;
};

// ---- features / solver ----
struct NonFiniteInput : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};

// ---- identify ----
struct SingularCovariance : Error {
    using Error::Error;
};
struct DegenerateTruth : Error {
    using Error::Error;
};

// ---- io / cli ----
struct FileNotFound : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace gridvolterra
