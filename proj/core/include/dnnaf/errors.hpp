#pragma once

#include <stdexcept>
#include <string>

namespace dnnaf {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid argument values (violated type invariants, dimension mismatches).
class ParameterError : public Error {
public:
    using Error::Error;
};

// Sample sets that cannot support the requested estimate (n < 2, zero variance).
class DegenerateSampleError : public Error {
public:
    using Error::Error;
};

// Evaluation exactly at a point where the quantity is undefined
// (uniform density boundary, Rayleigh kink at 0).
class UndefinedPointError : public Error {
public:
    using Error::Error;
};

// Training loss became non-finite; carries the epoch where it happened.
class TrainingDivergedError : public Error {
public:
    TrainingDivergedError(const std::string& msg, int epoch_index)
        : Error(msg), epoch(epoch_index) {}
    int epoch;
};

// The mean-stability step-size bound requires E[p'(v)/v] < 0; otherwise the
// bound is vacuous and we refuse to produce a number.
class BoundUndefinedError : public Error {
public:
    using Error::Error;
};

// Steady-state MSD denominator came out nonpositive: the closed form predicts
// mean-square instability at this step size. Carries the denominator.
class InstabilityPredictedError : public Error {
public:
    InstabilityPredictedError(const std::string& msg, double denom)
        : Error(msg), denominator(denom) {}
    double denominator;
};

// A curve had no detectable plateau where one was required.
class NotConvergedError : public Error {
public:
    using Error::Error;
};

// Malformed persisted data (model files, CSVs).
class FormatError : public Error {
public:
    using Error::Error;
};

// Bad experiment/CLI configuration (unknown keys, missing model files).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Filesystem-level failures.
class IoError : public Error {
public:
    using Error::Error;
};

// Non-finite accumulations inside Monte Carlo expectation estimates.
class EstimationError : public Error {
public:
    using Error::Error;
};

} // namespace dnnaf
