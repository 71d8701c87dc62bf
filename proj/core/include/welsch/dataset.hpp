#pragma once

#include <Eigen/Core>

namespace welsch {

/// Design matrix (one observation per row) plus response vector.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }

    /// Throws ConfigError unless n >= 1, p >= 1, length(y) == n and all entries are finite.
    void validate() const;
};

inline Eigen::VectorXd residuals(const Dataset& data, const Eigen::VectorXd& beta) {
    return data.y - data.X * beta;
}

}  // namespace welsch
