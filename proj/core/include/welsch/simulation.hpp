#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "welsch/dataset.hpp"
#include "welsch/diagnostics.hpp"
#include "welsch/estimators.hpp"

namespace welsch {

enum class DesignKind { gaussian_isotropic, rademacher };

struct NoiseSpec {
    enum class Kind { gaussian, pareto, student };
    Kind kind = Kind::gaussian;
    double pareto_shape = 2.5;  // tail index, > 2
    double student_df = 3.0;    // degrees of freedom, > 2

    void validate() const;
};

enum class AdversaryStrategy { random_shift, sign_aligned, response_flip };

const char* to_string(AdversaryStrategy strategy);
const char* to_string(DesignKind design);
const char* to_string(NoiseSpec::Kind kind);

/// Adversary configuration. The outlier count is floor(proportion * n) unless
/// an absolute count is given.
struct ContaminationSpec {
    double proportion = 0.0;  // in [0, 0.5)
    std::optional<long> count;
    double magnitude = 100.0;
    AdversaryStrategy strategy = AdversaryStrategy::random_shift;
    std::optional<Eigen::VectorXd> direction;  // unit vector for sign_aligned

    void validate() const;
    long resolve_count(long n) const;
};

/// Draws (X, y) from the mean-shift model y = X beta_star + theta + xi.
///
/// X and xi are generated before any contamination draw, so runs with equal
/// seeds share them across contamination settings (matched clean/corrupted
/// pairs). Strategies:
///   random_shift  - o uniformly chosen rows get theta = magnitude * (+-1)
///   sign_aligned  - the o rows with largest |x_i'u| get magnitude * sign(x_i'u);
///                   u defaults to beta_star/||beta_star||
///   response_flip - o uniformly chosen rows (among those with x_i'beta_star != 0)
///                   get theta = -2 x_i'beta_star
std::pair<Dataset, TruthMeta> generate_dataset(long n, const Eigen::VectorXd& beta_star,
                                               DesignKind design, const NoiseSpec& noise,
                                               const ContaminationSpec& contamination,
                                               std::uint64_t seed);

enum class ExperimentKind { bias_curve, mse_distribution, convergence_trace, rate_curve, normality };

const char* to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

/// One estimator entry of an experiment. For the Welsch loss, tau may follow a
/// theoretical selector instead of the fixed LossSpec value; the selectors see
/// the generating o and use ell = 2 (finite variance) and the given delta.
struct EstimatorSpec {
    enum class TauPolicy { fixed, prop2, debias, asymptotic };

    std::string name;
    LossSpec loss;
    TauPolicy tau_policy = TauPolicy::fixed;
    double delta = 0.05;
    bool two_stage = true;  // LAD warm start; squared + two_stage=false is closed-form OLS
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::mse_distribution;
    std::vector<long> ns = {1000};        // rate_curve sweeps over all entries
    long p = 5;
    std::optional<Eigen::VectorXd> beta_star;  // default: ones / sqrt(p)
    DesignKind design = DesignKind::gaussian_isotropic;
    NoiseSpec noise;
    ContaminationSpec contamination;
    std::vector<double> proportion_sweep;  // bias_curve sweeps over these
    std::vector<EstimatorSpec> estimators;
    long replicates = 100;
    std::uint64_t base_seed = 0;
    FitConfig fit_template;     // shared stage-1/optimizer settings; loss comes per estimator
    int trace_iterations = 100; // convergence_trace length

    void validate() const;
    Eigen::VectorXd resolved_beta_star() const;
};

struct ReplicateRow {
    long replicate = 0;
    std::string estimator;
    long n = 0;
    double proportion = 0.0;
    double err_l2 = 0.0;
    double err_sq = 0.0;
    int stage1_iters = 0;
    int stage2_iters = 0;
    double basin_fraction_init = 0.0;
    double basin_fraction = 0.0;
    std::string status;
    Eigen::VectorXd beta;
};

struct AggregateRow {
    long n = 0;
    double proportion = 0.0;
    std::string estimator;
    double bias = 0.0;  // || mean over replicates of (beta_hat - beta_star) ||
    double mean_err = 0.0;
    double median_err = 0.0;
    double median_sq_err = 0.0;
    double q25_sq_err = 0.0;
    double q75_sq_err = 0.0;
    long replicates = 0;  // successful fits entering the aggregate
};

struct ExperimentReport {
    ExperimentSpec spec;
    std::vector<ReplicateRow> rows;        // sorted by (n, proportion, replicate, estimator)
    std::vector<AggregateRow> aggregates;  // sorted by (n, proportion, estimator)
};

/// Runs every estimator on `replicates` datasets drawn with seeds
/// mix_seed(base_seed, r); a failed fit is recorded in the row status and
/// skipped by the aggregates. Single-cell engine behind the sweeps below.
ExperimentReport run_replicates(const ExperimentSpec& spec);

/// bias_curve: one cell per entry of proportion_sweep (common random numbers
/// across cells).
ExperimentReport bias_curve(const ExperimentSpec& spec);

/// mse_distribution: per-replicate squared errors plus medians.
ExperimentReport mse_distribution(const ExperimentSpec& spec);

/// rate_curve: one cell per entry of ns.
ExperimentReport rate_experiment(const ExperimentSpec& spec);

struct TraceRow {
    long replicate = 0;
    std::string estimator;
    int iteration = 0;
    double error = 0.0;  // || beta_k - beta_star ||
};

struct TraceReport {
    ExperimentSpec spec;
    std::vector<TraceRow> rows;  // sorted by (replicate, estimator, iteration)
};

/// Gradient-descent error traces from the LAD initialization. Iteration 0 is
/// the LAD estimate; traces converged before trace_iterations carry their last
/// value forward so every trace has equal length.
TraceReport convergence_trace_experiment(const ExperimentSpec& spec);

struct NormalityReport {
    long n = 0;
    long p = 0;
    long replicates = 0;
    std::uint64_t base_seed = 0;
    double tau = 0.0;
    Eigen::MatrixXd scaled_deviations;  // replicates x p, rows sqrt(n)(beta_hat - beta_star)
    Eigen::VectorXd coord_mean;
    Eigen::VectorXd coord_variance;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd ks_statistic;  // per coordinate, against the standard normal
};

/// Clean-data (theta = 0) study of sqrt(n)(beta_hat - beta_star) for the
/// two-stage Welsch estimator with tau = log(n)/n.
NormalityReport normality_experiment(long n, long p, long replicates, std::uint64_t base_seed);

/// Kolmogorov-Smirnov statistic of a sample against the standard normal.
double ks_statistic_vs_normal(Eigen::VectorXd sample);

}  // namespace welsch
