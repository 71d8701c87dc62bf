#pragma once

#include <limits>

#include <Eigen/Core>

#include "welsch/dataset.hpp"
#include "welsch/loss.hpp"
#include "welsch/optimizer.hpp"

namespace welsch {

enum class ScaleMode { fixed_unit, mad_of_lad_residuals };

/// Configuration for the two-stage fit: stage-1 LAD warm start controlled by
/// the median stopping threshold c, then the loss-specific minimization.
struct FitConfig {
    LossSpec loss;
    double algorithm1_c = 1.0;  // in standardized residual units
    int lad_max_iters = 100;
    OptimizerConfig optimizer;
    ScaleMode scale_mode = ScaleMode::fixed_unit;

    void validate() const;
};

struct FitResult {
    Eigen::VectorXd beta;
    double scale = 1.0;      // sigma used to standardize residuals in the fitted objective
    double objective = 0.0;  // (1/n) sum rho(r_i / scale) at beta
    int stage1_iters = 0;
    int stage2_iters = 0;
    // Fraction of observations with tau*(r_i/scale)^2 <= 1/2, at beta and at
    // the stage-2 initialization. NaN for non-Welsch losses.
    double basin_fraction = std::numeric_limits<double>::quiet_NaN();
    double basin_fraction_init = std::numeric_limits<double>::quiet_NaN();
    OptimTrace trace;
    TerminationStatus status = TerminationStatus::converged_grad;
    bool stage1_criterion_met = true;
};

/// Ordinary least squares via column-pivoted QR. Throws SingularMatrixError
/// when X is rank deficient.
Eigen::VectorXd fit_ols(const Dataset& data);

struct LadFit {
    Eigen::VectorXd beta;
    int iterations = 0;
    bool criterion_met = false;
};

/// Scale used by the stage-1 median stopping rule: raw residual units, or
/// units of the current iterate's MAD scale.
enum class LadCriterion { raw, mad_standardized };

/// IRLS for the absolute loss with smoothing floor eps = 1e-8 * scale(y).
/// Each iteration first checks the stopping rule median(|r|) < c (Algorithm-1
/// style), then takes one weighted least-squares step. Runs until the rule
/// fires, the iterates stop moving, or max_iters.
LadFit fit_lad(const Dataset& data, const Eigen::VectorXd& init, double c, int max_iters,
               LadCriterion criterion = LadCriterion::raw);

/// Minimizes the Welsch objective f(beta) = (1/n) sum (1/tau)(1 - exp(-tau r_i^2 / 2)).
FitResult fit_welsch(const Dataset& data, double tau, const Eigen::VectorXd& init,
                     const OptimizerConfig& opt);

/// General M-estimator for one loss. Smooth losses run through the optimizer;
/// pinball and absolute through IRLS with eps-smoothing.
FitResult fit_m_estimator(const Dataset& data, const LossSpec& spec, const Eigen::VectorXd& init,
                          const OptimizerConfig& opt);

/// Two-stage procedure: LAD warm start from the zero vector, an optional MAD
/// scale from the stage-1 residuals, then the stage-2 fit initialized at the
/// LAD estimate. A stage 1 that never meets the median criterion is reported
/// via stage1_criterion_met, not an error.
FitResult fit_two_stage(const Dataset& data, const FitConfig& cfg);

/// 1.4826 * MAD of the residuals, falling back to the sample standard
/// deviation when the MAD is zero. Throws DegenerateDataError when both vanish.
double estimate_scale(const Eigen::VectorXd& residuals);

/// f(beta) = (1/n) sum rho(r_i / scale) with its analytic gradient. The
/// returned callable references `data`; it must not outlive it.
Objective make_loss_objective(const Dataset& data, const LossSpec& spec, double scale = 1.0);

double loss_objective_value(const Dataset& data, const LossSpec& spec, const Eigen::VectorXd& beta,
                            double scale = 1.0);

}  // namespace welsch
