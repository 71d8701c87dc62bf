#include "welsch/optimizer.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "welsch/errors.hpp"

namespace welsch {

namespace {

constexpr double kCurvatureScreen = 1e-10;

struct LineSearchOutcome {
    bool ok = false;
    double step = 0.0;
    double value = 0.0;
    Eigen::VectorXd point;
    Eigen::VectorXd grad;
};

// Lewis-Overton style bracketing for the weak Wolfe conditions. Non-finite
// trial values are treated as Armijo failures so the bracket shrinks back
// into the region where the objective is defined.
LineSearchOutcome weak_wolfe(const Objective& objective, const Eigen::VectorXd& x0, double f0,
                             const Eigen::VectorXd& g0, const Eigen::VectorXd& dir, double c1,
                             double c2, int max_bisections) {
    const double slope0 = g0.dot(dir);
    if (!(slope0 < 0)) {
        throw std::invalid_argument("wolfe_line_search: direction is not a descent direction");
    }

    LineSearchOutcome out;
    out.grad.resize(x0.size());
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double t = 1.0;

    for (int i = 0; i < max_bisections; ++i) {
        out.point = x0 + t * dir;
        out.value = objective(out.point, out.grad);
        const bool finite = std::isfinite(out.value) && out.grad.allFinite();
        if (!finite || out.value > f0 + c1 * t * slope0) {
            hi = t;
            t = 0.5 * (lo + hi);
        } else if (out.grad.dot(dir) < c2 * slope0) {
            lo = t;
            t = std::isinf(hi) ? 2.0 * t : 0.5 * (lo + hi);
        } else {
            out.ok = true;
            out.step = t;
            return out;
        }
    }
    return out;
}

MinimizeResult run_lbfgs(const Objective& objective, const Eigen::VectorXd& init,
                         const OptimizerConfig& cfg) {
    MinimizeResult res;
    Eigen::VectorXd x = init;
    Eigen::VectorXd g(x.size());
    double f = objective(x, g);
    if (!std::isfinite(f) || !g.allFinite()) {
        throw OptimizationError("objective not finite at the initial point", init);
    }

    auto record = [&](int k) {
        TraceEntry e;
        e.iteration = k;
        e.value = f;
        e.grad_norm = g.norm();
        if (cfg.record_iterates) e.point = x;
        res.trace.entries.push_back(std::move(e));
    };
    record(0);

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;
    Eigen::VectorXd q(x.size()), dir(x.size());
    std::vector<double> alpha;

    res.trace.status = TerminationStatus::max_iters;
    if (g.norm() <= cfg.grad_tol) {
        res.trace.status = TerminationStatus::converged_grad;
        res.x = std::move(x);
        return res;
    }

    for (int k = 1; k <= cfg.max_iters; ++k) {
        // Two-loop recursion; with an empty history this is steepest descent.
        q = g;
        alpha.assign(s_hist.size(), 0.0);
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (!s_hist.empty()) {
            const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            q *= gamma;
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        dir = -q;
        if (!(g.dot(dir) < 0)) {
            // Stale curvature information; fall back to steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = -g;
        }

        LineSearchOutcome ls = weak_wolfe(objective, x, f, g, dir, cfg.wolfe_c1, cfg.wolfe_c2,
                                          cfg.max_line_search);
        if (!ls.ok) {
            res.trace.status = TerminationStatus::line_search_failure;
            break;
        }

        Eigen::VectorXd s = ls.point - x;
        Eigen::VectorXd yv = ls.grad - g;
        const double sy = s.dot(yv);
        if (sy > kCurvatureScreen * s.norm() * yv.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(yv));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > cfg.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        const double step_norm = (ls.point - x).norm();
        x = std::move(ls.point);
        f = ls.value;
        g = std::move(ls.grad);
        record(k);

        if (g.norm() <= cfg.grad_tol) {
            res.trace.status = TerminationStatus::converged_grad;
            break;
        }
        if (step_norm <= cfg.step_tol) {
            res.trace.status = TerminationStatus::converged_step;
            break;
        }
    }

    res.x = std::move(x);
    return res;
}

MinimizeResult run_gradient_descent(const Objective& objective, const Eigen::VectorXd& init,
                                    const OptimizerConfig& cfg) {
    MinimizeResult res;
    Eigen::VectorXd x = init;
    Eigen::VectorXd g(x.size()), g_cand(x.size());
    double f = objective(x, g);
    if (!std::isfinite(f) || !g.allFinite()) {
        throw OptimizationError("objective not finite at the initial point", init);
    }

    auto record = [&](int k) {
        TraceEntry e;
        e.iteration = k;
        e.value = f;
        e.grad_norm = g.norm();
        if (cfg.record_iterates) e.point = x;
        res.trace.entries.push_back(std::move(e));
    };
    record(0);

    res.trace.status = TerminationStatus::max_iters;
    if (g.norm() <= cfg.grad_tol) {
        res.trace.status = TerminationStatus::converged_grad;
        res.x = std::move(x);
        return res;
    }

    double step = cfg.gd_step;
    Eigen::VectorXd cand(x.size());
    for (int k = 1; k <= cfg.max_iters; ++k) {
        bool accepted = false;
        for (int h = 0; h < cfg.max_line_search; ++h) {
            cand = x - step * g;
            const double f_cand = objective(cand, g_cand);
            if (std::isfinite(f_cand) && g_cand.allFinite() && f_cand <= f) {
                accepted = true;
                const double step_norm = (cand - x).norm();
                x.swap(cand);
                f = f_cand;
                g.swap(g_cand);
                record(k);
                if (g.norm() <= cfg.grad_tol) {
                    res.trace.status = TerminationStatus::converged_grad;
                } else if (step_norm <= cfg.step_tol) {
                    res.trace.status = TerminationStatus::converged_step;
                }
                break;
            }
            step *= 0.5;  // fixed step, halved on increase
        }
        if (!accepted) {
            res.trace.status = TerminationStatus::line_search_failure;
            break;
        }
        if (res.trace.status != TerminationStatus::max_iters) break;
    }

    res.x = std::move(x);
    return res;
}

}  // namespace

const char* to_string(TerminationStatus status) {
    switch (status) {
        case TerminationStatus::converged_grad: return "converged_grad";
        case TerminationStatus::converged_step: return "converged_step";
        case TerminationStatus::max_iters: return "max_iters";
        case TerminationStatus::line_search_failure: return "line_search_failure";
    }
    return "?";
}

void OptimizerConfig::validate() const {
    if (memory < 1) throw ConfigError("optimizer: memory must be >= 1");
    if (max_iters < 1) throw ConfigError("optimizer: max_iters must be >= 1");
    if (!(grad_tol > 0) || !(step_tol > 0)) throw ConfigError("optimizer: tolerances must be > 0");
    if (!(0 < wolfe_c1 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1)) {
        throw ConfigError("optimizer: need 0 < wolfe_c1 < wolfe_c2 < 1");
    }
    if (!(gd_step > 0)) throw ConfigError("optimizer: gd_step must be > 0");
    if (max_line_search < 1) throw ConfigError("optimizer: max_line_search must be >= 1");
}

MinimizeResult minimize(const Objective& objective, const Eigen::VectorXd& init,
                        const OptimizerConfig& config) {
    config.validate();
    if (config.method == OptimMethod::gradient_descent) {
        return run_gradient_descent(objective, init, config);
    }
    return run_lbfgs(objective, init, config);
}

double wolfe_line_search(const Objective& objective, const Eigen::VectorXd& point,
                         const Eigen::VectorXd& direction, double c1, double c2,
                         int max_bisections) {
    Eigen::VectorXd g(point.size());
    const double f = objective(point, g);
    if (!std::isfinite(f) || !g.allFinite()) {
        throw OptimizationError("objective not finite at the line search origin", point);
    }
    LineSearchOutcome out =
        weak_wolfe(objective, point, f, g, direction, c1, c2, max_bisections);
    if (!out.ok) {
        throw LineSearchError("wolfe_line_search: bisection budget exhausted");
    }
    return out.step;
}

Eigen::VectorXd finite_diff_gradient(const Objective& objective, const Eigen::VectorXd& point,
                                     double h) {
    if (!(h > 0)) throw std::invalid_argument("finite_diff_gradient: h must be > 0");
    Eigen::VectorXd grad(point.size());
    Eigen::VectorXd scratch(point.size());
    Eigen::VectorXd x = point;
    for (Eigen::Index i = 0; i < point.size(); ++i) {
        x[i] = point[i] + h;
        const double fp = objective(x, scratch);
        x[i] = point[i] - h;
        const double fm = objective(x, scratch);
        x[i] = point[i];
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw std::domain_error("finite_diff_gradient: non-finite objective value");
        }
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

}  // namespace welsch
