#pragma once

#include <stdexcept>
#include <string>

namespace qmode {

//! Invalid argument supplied by the caller.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

//! Failure during estimation (rank deficiency, degenerate nuisance, ...).
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateEstimateError : public EstimationError {
public:
    using EstimationError::EstimationError;
};

class ConvergenceError : public EstimationError {
public:
    ConvergenceError(const std::string& what, long iterations)
        : EstimationError(what), iterations_(iterations) {}
    long iterations() const { return iterations_; }

private:
    long iterations_;
};

class BootstrapError : public EstimationError {
public:
    using EstimationError::EstimationError;
};

}  // namespace qmode
