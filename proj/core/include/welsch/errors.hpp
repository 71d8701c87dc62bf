#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace welsch {

/// Invalid user-supplied configuration (bad spec fields, malformed config files).
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// A linear solve hit a (numerically) singular system.
struct SingularMatrixError : std::runtime_error {
    explicit SingularMatrixError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Data admits no meaningful estimate (e.g. zero spread everywhere).
struct DegenerateDataError : std::runtime_error {
    explicit DegenerateDataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Line search could not satisfy the Wolfe conditions within its budget.
struct LineSearchError : std::runtime_error {
    explicit LineSearchError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Minimization aborted on a non-finite objective or gradient; carries the
/// last iterate with a finite objective value.
struct OptimizationError : std::runtime_error {
    OptimizationError(const std::string& msg, Eigen::VectorXd iterate)
        : std::runtime_error(msg), last_good_iterate(std::move(iterate)) {}
    Eigen::VectorXd last_good_iterate;
};

/// I/O failure while reading or writing files; carries the offending path in the message.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace welsch
