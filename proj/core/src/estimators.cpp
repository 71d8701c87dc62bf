#include "welsch/estimators.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "welsch/diagnostics.hpp"
#include "welsch/errors.hpp"
#include "welsch/numeric.hpp"

namespace welsch {

namespace {

// Smoothing floor for the IRLS weights of kinked losses.
double irls_eps(const Eigen::VectorXd& y) {
    double scale = 1.4826 * mad(y);
    if (!(scale > 0)) scale = sample_sd(y);
    if (!(scale > 0)) scale = 1.0;
    return 1e-8 * scale;
}

Eigen::VectorXd solve_weighted_ls(const Dataset& data, const Eigen::ArrayXd& w,
                                  const std::string& context) {
    const Eigen::MatrixXd Xw = w.matrix().asDiagonal() * data.X;
    const Eigen::MatrixXd A = data.X.transpose() * Xw;
    const Eigen::VectorXd b = Xw.transpose() * data.y;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    const Eigen::VectorXd sol = ldlt.solve(b);
    const double rel = (A * sol - b).norm();
    if (!sol.allFinite() || rel > 1e-6 * (b.norm() + 1e-300)) {
        throw SingularMatrixError(context + ": weighted normal equations are singular");
    }
    return sol;
}

// IRLS for the kinked losses (absolute, pinball): weights psi(r)/r with the
// smoothing floor eps on |r|.
FitResult fit_irls(const Dataset& data, const LossSpec& spec, const Eigen::VectorXd& init,
                   const OptimizerConfig& opt, double scale) {
    const double eps = irls_eps(data.y);
    Eigen::VectorXd beta = init;
    FitResult out;
    out.trace.status = TerminationStatus::max_iters;

    auto record = [&](int k, const Eigen::VectorXd& b) {
        TraceEntry e;
        e.iteration = k;
        e.value = loss_objective_value(data, spec, b, scale);
        e.grad_norm = std::numeric_limits<double>::quiet_NaN();
        if (opt.record_iterates) e.point = b;
        out.trace.entries.push_back(std::move(e));
    };
    record(0, beta);

    Eigen::ArrayXd w(data.n());
    for (int k = 1; k <= opt.max_iters; ++k) {
        const Eigen::VectorXd r = residuals(data, beta);
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            double kappa = 1.0;
            if (spec.family == LossFamily::pinball) {
                kappa = r[i] > 0 ? spec.q : (r[i] < 0 ? 1.0 - spec.q : 0.5);
            }
            w[i] = kappa / std::max(std::abs(r[i]), eps);
        }
        const Eigen::VectorXd next =
            solve_weighted_ls(data, w, "fit_m_estimator(" + std::string(to_string(spec.family)) +
                                           ") iteration " + std::to_string(k));
        const double move = (next - beta).norm();
        beta = next;
        out.stage2_iters = k;
        record(k, beta);
        if (move <= opt.step_tol * (1.0 + beta.norm())) {
            out.trace.status = TerminationStatus::converged_step;
            break;
        }
    }

    out.beta = std::move(beta);
    out.status = out.trace.status;
    out.scale = scale;
    out.objective = loss_objective_value(data, spec, out.beta, scale);
    return out;
}

// Shared smooth/IRLS dispatch behind fit_m_estimator and stage 2 of the
// two-stage procedure.
FitResult fit_loss_core(const Dataset& data, const LossSpec& spec, const Eigen::VectorXd& init,
                        const OptimizerConfig& opt, double scale) {
    spec.validate();
    if (init.size() != data.p()) throw ConfigError("fit: init dimension mismatch");
    if (!init.allFinite()) throw ConfigError("fit: init must be finite");

    FitResult out;
    if (spec.smooth()) {
        const Objective obj = make_loss_objective(data, spec, scale);
        MinimizeResult m = minimize(obj, init, opt);
        out.beta = std::move(m.x);
        out.trace = std::move(m.trace);
        out.status = out.trace.status;
        out.stage2_iters =
            out.trace.entries.empty() ? 0 : out.trace.entries.back().iteration;
        out.scale = scale;
        out.objective = loss_objective_value(data, spec, out.beta, scale);
    } else {
        out = fit_irls(data, spec, init, opt, scale);
    }

    if (spec.family == LossFamily::welsch) {
        out.basin_fraction =
            basin_fraction_of_residuals(residuals(data, out.beta) / scale, spec.tau);
        out.basin_fraction_init =
            basin_fraction_of_residuals(residuals(data, init) / scale, spec.tau);
    }
    return out;
}

}  // namespace

void Dataset::validate() const {
    if (X.rows() < 1 || X.cols() < 1) throw ConfigError("Dataset: X must be at least 1x1");
    if (y.size() != X.rows()) throw ConfigError("Dataset: length(y) must equal rows(X)");
    if (!X.allFinite() || !y.allFinite()) throw ConfigError("Dataset: entries must be finite");
}

void FitConfig::validate() const {
    loss.validate();
    if (!(algorithm1_c > 0)) throw ConfigError("FitConfig: algorithm1_c must be > 0");
    if (lad_max_iters < 1) throw ConfigError("FitConfig: lad_max_iters must be >= 1");
    optimizer.validate();
}

Eigen::VectorXd fit_ols(const Dataset& data) {
    data.validate();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.X);
    if (qr.rank() < data.p()) {
        throw SingularMatrixError("fit_ols: design matrix is rank deficient");
    }
    return qr.solve(data.y);
}

LadFit fit_lad(const Dataset& data, const Eigen::VectorXd& init, double c, int max_iters,
               LadCriterion criterion) {
    data.validate();
    if (data.n() <= data.p()) throw ConfigError("fit_lad: requires n > p");
    if (init.size() != data.p()) throw ConfigError("fit_lad: init dimension mismatch");
    if (max_iters < 0) throw ConfigError("fit_lad: max_iters must be >= 0");

    const double eps = irls_eps(data.y);
    LadFit out;
    Eigen::VectorXd beta = init;
    bool stalled = false;

    while (true) {
        const Eigen::VectorXd r = residuals(data, beta);
        double crit_scale = 1.0;
        if (criterion == LadCriterion::mad_standardized) {
            const double s = 1.4826 * mad(r);
            if (s > 0) crit_scale = s;
        }
        if (median_abs(r) < c * crit_scale) {
            out.criterion_met = true;
            break;
        }
        if (stalled || out.iterations >= max_iters) break;

        const Eigen::ArrayXd w = 1.0 / r.array().abs().max(eps);
        const Eigen::VectorXd next = solve_weighted_ls(
            data, w, "fit_lad iteration " + std::to_string(out.iterations + 1));
        ++out.iterations;
        stalled = (next - beta).norm() <= 1e-12 * (1.0 + next.norm());
        beta = next;
    }

    out.beta = std::move(beta);
    return out;
}

FitResult fit_welsch(const Dataset& data, double tau, const Eigen::VectorXd& init,
                     const OptimizerConfig& opt) {
    data.validate();
    if (!(tau > 0) || !std::isfinite(tau)) throw ConfigError("fit_welsch: tau must be > 0");
    return fit_loss_core(data, LossSpec::welsch(tau), init, opt, 1.0);
}

FitResult fit_m_estimator(const Dataset& data, const LossSpec& spec, const Eigen::VectorXd& init,
                          const OptimizerConfig& opt) {
    data.validate();
    return fit_loss_core(data, spec, init, opt, 1.0);
}

FitResult fit_two_stage(const Dataset& data, const FitConfig& cfg) {
    data.validate();
    cfg.validate();
    if (data.n() <= data.p()) throw ConfigError("fit_two_stage: requires n > p");

    const LadCriterion crit = cfg.scale_mode == ScaleMode::mad_of_lad_residuals
                                  ? LadCriterion::mad_standardized
                                  : LadCriterion::raw;
    const LadFit lad = fit_lad(data, Eigen::VectorXd::Zero(data.p()), cfg.algorithm1_c,
                               cfg.lad_max_iters, crit);

    double sigma = 1.0;
    if (cfg.scale_mode == ScaleMode::mad_of_lad_residuals) {
        try {
            sigma = estimate_scale(residuals(data, lad.beta));
        } catch (const DegenerateDataError&) {
            sigma = 1.0;  // stage 1 fit the data exactly; scale is immaterial
        }
    }

    FitResult out = fit_loss_core(data, cfg.loss, lad.beta, cfg.optimizer, sigma);
    out.stage1_iters = lad.iterations;
    out.stage1_criterion_met = lad.criterion_met;
    return out;
}

double estimate_scale(const Eigen::VectorXd& residuals) {
    if (residuals.size() < 2) throw ConfigError("estimate_scale: need at least two residuals");
    const double m = mad(residuals);
    if (m > 0) return 1.4826 * m;
    const double sd = sample_sd(residuals);
    if (sd > 0) return sd;
    throw DegenerateDataError("estimate_scale: residuals have zero spread");
}

Objective make_loss_objective(const Dataset& data, const LossSpec& spec, double scale) {
    spec.validate();
    if (!(scale > 0)) throw ConfigError("make_loss_objective: scale must be > 0");
    const double inv_scale = 1.0 / scale;
    const double inv_n = 1.0 / static_cast<double>(data.n());
    return [&data, spec, inv_scale, inv_n](const Eigen::VectorXd& beta,
                                           Eigen::VectorXd& grad) -> double {
        const Eigen::VectorXd r = data.y - data.X * beta;
        Eigen::VectorXd psis(r.size());
        double value = 0.0;
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            const double u = r[i] * inv_scale;
            value += rho(spec, u);
            psis[i] = psi(spec, u);
        }
        grad.noalias() = -(data.X.transpose() * psis) * (inv_n * inv_scale);
        return value * inv_n;
    };
}

double loss_objective_value(const Dataset& data, const LossSpec& spec, const Eigen::VectorXd& beta,
                            double scale) {
    const Eigen::VectorXd r = residuals(data, beta);
    double value = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        value += rho(spec, r[i] / scale);
    }
    return value / static_cast<double>(data.n());
}

}  // namespace welsch
