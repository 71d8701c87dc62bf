#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace welsch {

/// Smooth objective: returns f(x) and fills grad (resized by the caller's contract).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

enum class OptimMethod { lbfgs, gradient_descent };

enum class TerminationStatus { converged_grad, converged_step, max_iters, line_search_failure };

const char* to_string(TerminationStatus status);

struct OptimizerConfig {
    OptimMethod method = OptimMethod::lbfgs;
    int memory = 10;          // L-BFGS history length
    int max_iters = 500;
    double grad_tol = 1e-8;   // stop when ||grad|| <= grad_tol
    double step_tol = 1e-12;  // stop when ||x_{k+1} - x_k|| <= step_tol
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    double gd_step = 0.1;     // fixed step for gradient descent, halved on increase
    int max_line_search = 60;
    bool record_iterates = false;  // keep per-iteration points in the trace

    void validate() const;
};

struct TraceEntry {
    int iteration = 0;
    double value = 0.0;
    double grad_norm = 0.0;
    std::optional<Eigen::VectorXd> point;
};

struct OptimTrace {
    std::vector<TraceEntry> entries;
    TerminationStatus status = TerminationStatus::max_iters;
};

struct MinimizeResult {
    Eigen::VectorXd x;
    OptimTrace trace;
};

/// Minimizes the objective from init. The returned point never has a larger
/// objective value than init. Non-finite values at an accepted iterate raise
/// OptimizationError carrying the last good iterate; a failed line search
/// terminates with status line_search_failure and the best iterate so far.
MinimizeResult minimize(const Objective& objective, const Eigen::VectorXd& init,
                        const OptimizerConfig& config);

/// Weak Wolfe line search by bracketing and bisection. Returns a step length
/// satisfying the Armijo (c1) and curvature (c2) conditions. Throws
/// std::invalid_argument if direction is not a descent direction and
/// LineSearchError when the bisection budget runs out.
double wolfe_line_search(const Objective& objective, const Eigen::VectorXd& point,
                         const Eigen::VectorXd& direction, double c1, double c2,
                         int max_bisections);

/// Central-difference gradient; test oracle for analytic gradients.
Eigen::VectorXd finite_diff_gradient(const Objective& objective, const Eigen::VectorXd& point,
                                     double h);

}  // namespace welsch
