#pragma once

#include <vector>

#include <Eigen/Core>

#include "welsch/dataset.hpp"

namespace welsch {

/// Simulation ground truth: coefficients, outlier support, shift and noise vectors.
struct TruthMeta {
    Eigen::VectorXd beta_star;
    std::vector<Eigen::Index> outlier_indices;  // sorted support of theta
    Eigen::VectorXd theta;                      // zero off the support
    Eigen::VectorXd noise;

    void validate(Eigen::Index n, Eigen::Index p) const;
};

struct BasinParams {
    double tau = 1.0;
    double D = 0.5;  // must lie in (0,1)
};

/// Fraction of residuals with tau * r^2 <= 1/2.
double basin_fraction_of_residuals(const Eigen::VectorXd& residuals, double tau);

/// (1/n) #{ i : tau (y_i - x_i'beta)^2 <= 1/2 }. Membership in the basin set
/// means this fraction is at least D.
double basin_indicator_fraction(const Dataset& data, const Eigen::VectorXd& beta, double tau);

/// Closed-ball test ||beta - beta_star|| <= c.
bool ball_membership(const Eigen::VectorXd& beta, const Eigen::VectorXd& beta_star, double c);

/// |O'| where O' = { i : (y_i - x_i'beta_star)^2 >= 1/(2 tau) } united with the
/// true outlier support.
long augmented_outlier_count(const Dataset& data, const TruthMeta& truth, double tau);

/// Minimal D satisfying the basin condition: C^2 (p + 2o'(1 + log(n/(2o')))) / n.
/// The caller checks D < 1 for a non-vacuous guarantee. Requires 1 <= o' <= n/2.
double d_condition(long n, long p, long o_prime, double C);

enum class TauMode { prop2, debias, asymptotic };

/// Theoretical tau selectors. prop2: C ((o + log(1/delta))/n)^(2/ell) with the
/// sub-Gaussian convention 2/ell = 0 at ell = infinity; debias: C log(1/delta)/n;
/// asymptotic: C log(n)/n.
double theoretical_tau(long n, long o, double delta, double ell, double C, TauMode mode);

/// Exact Hessian of the Welsch objective:
/// (1/n) sum w_i x_i x_i' - (tau/n) sum w_i r_i^2 x_i x_i', symmetrized.
Eigen::MatrixXd welsch_hessian(const Dataset& data, const Eigen::VectorXd& beta, double tau);

/// Smallest eigenvalue of the exact Hessian (dense symmetric solve, p <= 500).
double hessian_min_eigenvalue(const Dataset& data, const Eigen::VectorXd& beta, double tau);

/// Deviation-bound value, up to the unknown absolute constant C1:
/// C1 ( (o/n)^(1-1/ell) sqrt(log(en/(2o))) + sqrt(p/n)
///      + sqrt((log(1/delta)/n) log(en/(2 log(1/delta)))) ).
/// The contamination term is dropped when o = 0.
double deviation_bound(long n, long p, long o, double delta, double ell, double C1);

}  // namespace welsch
