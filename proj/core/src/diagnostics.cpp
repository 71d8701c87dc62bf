#include "welsch/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "welsch/errors.hpp"

namespace welsch {

void TruthMeta::validate(Eigen::Index n, Eigen::Index p) const {
    if (beta_star.size() != p) throw ConfigError("TruthMeta: beta_star dimension mismatch");
    if (theta.size() != n || noise.size() != n) {
        throw ConfigError("TruthMeta: theta/noise length mismatch");
    }
    for (Eigen::Index i : outlier_indices) {
        if (i < 0 || i >= n) throw ConfigError("TruthMeta: outlier index out of range");
    }
}

double basin_fraction_of_residuals(const Eigen::VectorXd& residuals, double tau) {
    if (!(tau > 0)) throw std::domain_error("basin fraction: tau must be > 0");
    const Eigen::Index n = residuals.size();
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (tau * residuals[i] * residuals[i] <= 0.5) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(n);
}

double basin_indicator_fraction(const Dataset& data, const Eigen::VectorXd& beta, double tau) {
    return basin_fraction_of_residuals(residuals(data, beta), tau);
}

bool ball_membership(const Eigen::VectorXd& beta, const Eigen::VectorXd& beta_star, double c) {
    if (!(c > 0)) throw std::domain_error("ball_membership: c must be > 0");
    return (beta - beta_star).norm() <= c;
}

long augmented_outlier_count(const Dataset& data, const TruthMeta& truth, double tau) {
    if (!(tau > 0)) throw std::domain_error("augmented_outlier_count: tau must be > 0");
    truth.validate(data.n(), data.p());
    const double threshold = 1.0 / (2.0 * tau);
    const Eigen::VectorXd r = data.y - data.X * truth.beta_star;
    std::vector<bool> in_set(static_cast<std::size_t>(data.n()), false);
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        if (r[i] * r[i] >= threshold) in_set[static_cast<std::size_t>(i)] = true;
    }
    for (Eigen::Index i : truth.outlier_indices) in_set[static_cast<std::size_t>(i)] = true;
    long count = 0;
    for (bool b : in_set) count += b ? 1 : 0;
    return count;
}

double d_condition(long n, long p, long o_prime, double C) {
    if (n < 1 || p < 1) throw std::domain_error("d_condition: need n, p >= 1");
    if (!(C > 0)) throw std::domain_error("d_condition: C must be > 0");
    if (o_prime < 1 || 2 * o_prime > n) {
        throw std::domain_error("d_condition: o' must satisfy 1 <= o' <= n/2");
    }
    const double op = static_cast<double>(o_prime);
    const double nn = static_cast<double>(n);
    return C * C * (static_cast<double>(p) + 2.0 * op * (1.0 + std::log(nn / (2.0 * op)))) / nn;
}

double theoretical_tau(long n, long o, double delta, double ell, double C, TauMode mode) {
    if (n < 1) throw std::domain_error("theoretical_tau: n must be >= 1");
    if (o < 0) throw std::domain_error("theoretical_tau: o must be >= 0");
    if (!(delta > 0 && delta < 1)) throw std::domain_error("theoretical_tau: delta must be in (0,1)");
    if (!(ell >= 2)) throw std::domain_error("theoretical_tau: ell must be >= 2");
    if (!(C > 0)) throw std::domain_error("theoretical_tau: C must be > 0");
    const double nn = static_cast<double>(n);
    switch (mode) {
        case TauMode::prop2: {
            const double exponent = std::isinf(ell) ? 0.0 : 2.0 / ell;
            const double base = (static_cast<double>(o) + std::log(1.0 / delta)) / nn;
            return C * std::pow(base, exponent);
        }
        case TauMode::debias:
            return C * std::log(1.0 / delta) / nn;
        case TauMode::asymptotic:
            return C * std::log(nn) / nn;
    }
    throw std::domain_error("theoretical_tau: unknown mode");
}

Eigen::MatrixXd welsch_hessian(const Dataset& data, const Eigen::VectorXd& beta, double tau) {
    if (!(tau > 0)) throw std::domain_error("welsch_hessian: tau must be > 0");
    const Eigen::VectorXd r = residuals(data, beta);
    const Eigen::ArrayXd r2 = r.array().square();
    const Eigen::ArrayXd w = (-0.5 * tau * r2).exp();
    const Eigen::VectorXd coef = (w * (1.0 - tau * r2)).matrix();
    Eigen::MatrixXd H = data.X.transpose() * coef.asDiagonal() * data.X /
                        static_cast<double>(data.n());
    H = 0.5 * (H + H.transpose()).eval();
    return H;
}

double hessian_min_eigenvalue(const Dataset& data, const Eigen::VectorXd& beta, double tau) {
    if (data.p() > 500) {
        throw std::invalid_argument("hessian_min_eigenvalue: dense solve limited to p <= 500");
    }
    const Eigen::MatrixXd H = welsch_hessian(data, beta, tau);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(H, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("hessian_min_eigenvalue: eigensolver failed to converge");
    }
    return solver.eigenvalues().minCoeff();
}

double deviation_bound(long n, long p, long o, double delta, double ell, double C1) {
    if (n < 1 || p < 1) throw std::domain_error("deviation_bound: need n, p >= 1");
    if (o < 0) throw std::domain_error("deviation_bound: o must be >= 0");
    if (!(delta > 0 && delta < 1)) throw std::domain_error("deviation_bound: delta must be in (0,1)");
    if (!(ell >= 2)) throw std::domain_error("deviation_bound: ell must be >= 2");
    const double nn = static_cast<double>(n);
    const double e = std::exp(1.0);
    double contamination = 0.0;
    if (o > 0) {
        const double frac = static_cast<double>(o) / nn;
        const double exponent = std::isinf(ell) ? 1.0 : 1.0 - 1.0 / ell;
        contamination = std::pow(frac, exponent) *
                        std::sqrt(std::log(e * nn / (2.0 * static_cast<double>(o))));
    }
    const double parametric = std::sqrt(static_cast<double>(p) / nn);
    const double log_delta = std::log(1.0 / delta);
    const double confidence =
        std::sqrt(log_delta / nn * std::log(e * nn / (2.0 * log_delta)));
    return C1 * (contamination + parametric + confidence);
}

}  // namespace welsch
