#include "welsch/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include "welsch/errors.hpp"
#include "welsch/numeric.hpp"
#include "welsch/rng.hpp"

namespace welsch {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void parallel_for(long count, const std::function<void(long)>& fn) {
    const unsigned hw = std::thread::hardware_concurrency();
    const long workers = std::min<long>(hw ? hw : 1, count);
    if (workers <= 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (long t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            while (true) {
                const long i = next.fetch_add(1);
                if (i >= count) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

double draw_noise(Rng& rng, const NoiseSpec& noise) {
    switch (noise.kind) {
        case NoiseSpec::Kind::gaussian: return rng.gaussian();
        case NoiseSpec::Kind::pareto: return rng.pareto_standardized(noise.pareto_shape);
        case NoiseSpec::Kind::student: return rng.student_standardized(noise.student_df);
    }
    return 0.0;
}

std::vector<long> pick_uniform_indices(Rng& rng, const std::vector<long>& candidates, long o,
                                       const char* what) {
    if (static_cast<long>(candidates.size()) < o) {
        throw ConfigError(std::string("generate_dataset: not enough eligible rows for ") + what);
    }
    std::vector<long> perm = candidates;
    rng.shuffle(perm);
    perm.resize(static_cast<std::size_t>(o));
    std::sort(perm.begin(), perm.end());
    return perm;
}

FitConfig resolve_fit_config(const EstimatorSpec& est, const FitConfig& tmpl, long n, long o) {
    FitConfig cfg = tmpl;
    cfg.loss = est.loss;
    if (est.loss.family == LossFamily::welsch && est.tau_policy != EstimatorSpec::TauPolicy::fixed) {
        TauMode mode = TauMode::prop2;
        if (est.tau_policy == EstimatorSpec::TauPolicy::debias) mode = TauMode::debias;
        if (est.tau_policy == EstimatorSpec::TauPolicy::asymptotic) mode = TauMode::asymptotic;
        cfg.loss.tau = theoretical_tau(n, o, est.delta, 2.0, 1.0, mode);
    }
    return cfg;
}

ReplicateRow fit_one(const Dataset& data, const TruthMeta& truth, const EstimatorSpec& est,
                     const FitConfig& cfg, long replicate, double proportion) {
    ReplicateRow row;
    row.replicate = replicate;
    row.estimator = est.name;
    row.n = data.n();
    row.proportion = proportion;
    try {
        FitResult fit;
        if (est.loss.family == LossFamily::squared && !est.two_stage) {
            fit.beta = fit_ols(data);
            fit.objective = loss_objective_value(data, est.loss, fit.beta);
            fit.status = TerminationStatus::converged_grad;
        } else if (est.two_stage) {
            fit = fit_two_stage(data, cfg);
        } else {
            fit = fit_m_estimator(data, cfg.loss, Eigen::VectorXd::Zero(data.p()), cfg.optimizer);
        }
        const Eigen::VectorXd dev = fit.beta - truth.beta_star;
        row.beta = fit.beta;
        row.err_l2 = dev.norm();
        row.err_sq = dev.squaredNorm();
        row.stage1_iters = fit.stage1_iters;
        row.stage2_iters = fit.stage2_iters;
        row.basin_fraction = fit.basin_fraction;
        row.basin_fraction_init = fit.basin_fraction_init;
        row.status = to_string(fit.status);
        if (!fit.stage1_criterion_met) row.status += "+stage1_warning";
    } catch (const std::exception& e) {
        row.beta = Eigen::VectorXd::Constant(data.p(), kNan);
        row.err_l2 = kNan;
        row.err_sq = kNan;
        row.basin_fraction = kNan;
        row.basin_fraction_init = kNan;
        row.status = std::string("error: ") + e.what();
    }
    return row;
}

void sort_rows(std::vector<ReplicateRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const ReplicateRow& a, const ReplicateRow& b) {
        if (a.n != b.n) return a.n < b.n;
        if (a.proportion != b.proportion) return a.proportion < b.proportion;
        if (a.replicate != b.replicate) return a.replicate < b.replicate;
        return a.estimator < b.estimator;
    });
}

// One (n, contamination) cell; rows come back unsorted.
std::vector<ReplicateRow> run_cell(const ExperimentSpec& spec, long n,
                                   const ContaminationSpec& contamination) {
    const Eigen::VectorXd beta_star = spec.resolved_beta_star();
    const long o = contamination.resolve_count(n);
    const long n_estimators = static_cast<long>(spec.estimators.size());
    std::vector<FitConfig> configs;
    configs.reserve(spec.estimators.size());
    for (const EstimatorSpec& est : spec.estimators) {
        configs.push_back(resolve_fit_config(est, spec.fit_template, n, o));
    }

    std::vector<ReplicateRow> rows(static_cast<std::size_t>(spec.replicates * n_estimators));
    parallel_for(spec.replicates, [&](long r) {
        const auto [data, truth] = generate_dataset(n, beta_star, spec.design, spec.noise,
                                                    contamination, mix_seed(spec.base_seed,
                                                                            static_cast<std::uint64_t>(r)));
        for (long e = 0; e < n_estimators; ++e) {
            rows[static_cast<std::size_t>(r * n_estimators + e)] =
                fit_one(data, truth, spec.estimators[static_cast<std::size_t>(e)],
                        configs[static_cast<std::size_t>(e)], r, contamination.proportion);
        }
    });
    return rows;
}

std::vector<AggregateRow> aggregate_cell(const std::vector<ReplicateRow>& rows,
                                         const ExperimentSpec& spec, long n, double proportion,
                                         const Eigen::VectorXd& beta_star) {
    std::vector<AggregateRow> out;
    for (const EstimatorSpec& est : spec.estimators) {
        AggregateRow agg;
        agg.n = n;
        agg.proportion = proportion;
        agg.estimator = est.name;
        Eigen::VectorXd dev_sum = Eigen::VectorXd::Zero(beta_star.size());
        std::vector<double> errs, sq_errs;
        for (const ReplicateRow& row : rows) {
            if (row.estimator != est.name || row.n != n || row.proportion != proportion) continue;
            if (!std::isfinite(row.err_l2)) continue;  // failed fit, recorded in its row
            dev_sum += row.beta - beta_star;
            errs.push_back(row.err_l2);
            sq_errs.push_back(row.err_sq);
        }
        agg.replicates = static_cast<long>(errs.size());
        if (!errs.empty()) {
            agg.bias = (dev_sum / static_cast<double>(errs.size())).norm();
            agg.mean_err =
                std::accumulate(errs.begin(), errs.end(), 0.0) / static_cast<double>(errs.size());
            std::sort(errs.begin(), errs.end());
            std::sort(sq_errs.begin(), sq_errs.end());
            agg.median_err = quantile_sorted(errs, 0.5);
            agg.median_sq_err = quantile_sorted(sq_errs, 0.5);
            agg.q25_sq_err = quantile_sorted(sq_errs, 0.25);
            agg.q75_sq_err = quantile_sorted(sq_errs, 0.75);
        } else {
            agg.bias = agg.mean_err = agg.median_err = kNan;
            agg.median_sq_err = agg.q25_sq_err = agg.q75_sq_err = kNan;
        }
        out.push_back(std::move(agg));
    }
    std::sort(out.begin(), out.end(), [](const AggregateRow& a, const AggregateRow& b) {
        return a.estimator < b.estimator;
    });
    return out;
}

}  // namespace

const char* to_string(AdversaryStrategy strategy) {
    switch (strategy) {
        case AdversaryStrategy::random_shift: return "random_shift";
        case AdversaryStrategy::sign_aligned: return "sign_aligned";
        case AdversaryStrategy::response_flip: return "response_flip";
    }
    return "?";
}

const char* to_string(DesignKind design) {
    switch (design) {
        case DesignKind::gaussian_isotropic: return "gaussian_isotropic";
        case DesignKind::rademacher: return "rademacher";
    }
    return "?";
}

const char* to_string(NoiseSpec::Kind kind) {
    switch (kind) {
        case NoiseSpec::Kind::gaussian: return "gaussian";
        case NoiseSpec::Kind::pareto: return "pareto";
        case NoiseSpec::Kind::student: return "student";
    }
    return "?";
}

const char* to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::bias_curve: return "bias_curve";
        case ExperimentKind::mse_distribution: return "mse_distribution";
        case ExperimentKind::convergence_trace: return "convergence_trace";
        case ExperimentKind::rate_curve: return "rate_curve";
        case ExperimentKind::normality: return "normality";
    }
    return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
    if (name == "bias_curve") return ExperimentKind::bias_curve;
    if (name == "mse_distribution") return ExperimentKind::mse_distribution;
    if (name == "convergence_trace") return ExperimentKind::convergence_trace;
    if (name == "rate_curve") return ExperimentKind::rate_curve;
    if (name == "normality") return ExperimentKind::normality;
    throw ConfigError("unknown experiment kind: " + name);
}

void NoiseSpec::validate() const {
    if (kind == Kind::pareto && !(pareto_shape > 2)) {
        throw ConfigError("noise: pareto shape must be > 2 for unit variance");
    }
    if (kind == Kind::student && !(student_df > 2)) {
        throw ConfigError("noise: student df must be > 2 for unit variance");
    }
}

void ContaminationSpec::validate() const {
    if (!(proportion >= 0 && proportion < 0.5)) {
        throw ConfigError("contamination: proportion must lie in [0, 0.5)");
    }
    if (count && *count < 0) throw ConfigError("contamination: count must be >= 0");
    if (!(magnitude > 0)) throw ConfigError("contamination: magnitude must be > 0");
    if (direction && !(direction->norm() > 0)) {
        throw ConfigError("contamination: direction must be a nonzero vector");
    }
}

long ContaminationSpec::resolve_count(long n) const {
    if (count) return *count;
    return static_cast<long>(std::floor(proportion * static_cast<double>(n)));
}

std::pair<Dataset, TruthMeta> generate_dataset(long n, const Eigen::VectorXd& beta_star,
                                               DesignKind design, const NoiseSpec& noise,
                                               const ContaminationSpec& contamination,
                                               std::uint64_t seed) {
    if (n < 1) throw ConfigError("generate_dataset: n must be >= 1");
    const long p = beta_star.size();
    if (p < 1) throw ConfigError("generate_dataset: beta_star must be nonempty");
    noise.validate();
    contamination.validate();
    const long o = contamination.resolve_count(n);
    if (o > 0 && 2 * o >= n) {
        throw ConfigError("generate_dataset: outlier count must stay below n/2");
    }
    if (contamination.direction && contamination.direction->size() != p) {
        throw ConfigError("generate_dataset: direction dimension mismatch");
    }

    Rng rng(seed);
    Dataset data;
    data.X.resize(n, p);
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < p; ++j) {
            data.X(i, j) = design == DesignKind::gaussian_isotropic ? rng.gaussian()
                                                                    : rng.rademacher();
        }
    }

    TruthMeta truth;
    truth.beta_star = beta_star;
    truth.noise.resize(n);
    for (long i = 0; i < n; ++i) truth.noise[i] = draw_noise(rng, noise);
    truth.theta = Eigen::VectorXd::Zero(n);

    if (o > 0) {
        std::vector<long> chosen;
        switch (contamination.strategy) {
            case AdversaryStrategy::random_shift: {
                std::vector<long> all(static_cast<std::size_t>(n));
                std::iota(all.begin(), all.end(), 0L);
                chosen = pick_uniform_indices(rng, all, o, "random_shift");
                for (long i : chosen) truth.theta[i] = contamination.magnitude * rng.rademacher();
                break;
            }
            case AdversaryStrategy::sign_aligned: {
                Eigen::VectorXd u;
                if (contamination.direction) {
                    u = contamination.direction->normalized();
                } else if (beta_star.norm() > 0) {
                    u = beta_star.normalized();
                } else {
                    u = Eigen::VectorXd::Unit(p, 0);
                }
                const Eigen::VectorXd scores = data.X * u;
                std::vector<long> order(static_cast<std::size_t>(n));
                std::iota(order.begin(), order.end(), 0L);
                std::sort(order.begin(), order.end(), [&](long a, long b) {
                    const double sa = std::abs(scores[a]);
                    const double sb = std::abs(scores[b]);
                    if (sa != sb) return sa > sb;
                    return a < b;
                });
                chosen.assign(order.begin(), order.begin() + o);
                std::sort(chosen.begin(), chosen.end());
                for (long i : chosen) {
                    truth.theta[i] = contamination.magnitude * (scores[i] >= 0 ? 1.0 : -1.0);
                }
                break;
            }
            case AdversaryStrategy::response_flip: {
                const Eigen::VectorXd signal = data.X * beta_star;
                std::vector<long> eligible;
                for (long i = 0; i < n; ++i) {
                    if (signal[i] != 0.0) eligible.push_back(i);
                }
                chosen = pick_uniform_indices(rng, eligible, o, "response_flip");
                for (long i : chosen) truth.theta[i] = -2.0 * signal[i];
                break;
            }
        }
        truth.outlier_indices.assign(chosen.begin(), chosen.end());
    }

    data.y = data.X * beta_star + truth.theta + truth.noise;
    return {std::move(data), std::move(truth)};
}

Eigen::VectorXd ExperimentSpec::resolved_beta_star() const {
    if (beta_star) {
        if (beta_star->size() != p) throw ConfigError("experiment: beta_star dimension mismatch");
        return *beta_star;
    }
    return Eigen::VectorXd::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));
}

void ExperimentSpec::validate() const {
    if (ns.empty()) throw ConfigError("experiment: ns must be nonempty");
    for (long n : ns) {
        if (n < 2) throw ConfigError("experiment: every n must be >= 2");
    }
    if (p < 1) throw ConfigError("experiment: p must be >= 1");
    if (replicates < 1) throw ConfigError("experiment: replicates must be >= 1");
    if (estimators.empty()) throw ConfigError("experiment: estimators must be nonempty");
    for (std::size_t i = 0; i < estimators.size(); ++i) {
        if (estimators[i].name.empty()) throw ConfigError("experiment: estimator names required");
        estimators[i].loss.validate();
        if (!(estimators[i].delta > 0 && estimators[i].delta < 1)) {
            throw ConfigError("experiment: estimator delta must lie in (0,1)");
        }
        for (std::size_t j = i + 1; j < estimators.size(); ++j) {
            if (estimators[i].name == estimators[j].name) {
                throw ConfigError("experiment: duplicate estimator name " + estimators[i].name);
            }
        }
    }
    noise.validate();
    contamination.validate();
    for (double prop : proportion_sweep) {
        if (!(prop >= 0 && prop < 0.5)) {
            throw ConfigError("experiment: sweep proportions must lie in [0, 0.5)");
        }
    }
    if (kind == ExperimentKind::bias_curve && proportion_sweep.empty()) {
        throw ConfigError("experiment: bias_curve needs a proportion sweep");
    }
    if (kind == ExperimentKind::convergence_trace) {
        if (trace_iterations < 1) throw ConfigError("experiment: trace_iterations must be >= 1");
        for (const EstimatorSpec& est : estimators) {
            if (!est.loss.smooth()) {
                throw ConfigError("experiment: convergence traces need smooth losses");
            }
        }
    }
    fit_template.validate();
    if (beta_star && beta_star->size() != p) {
        throw ConfigError("experiment: beta_star dimension mismatch");
    }
}

ExperimentReport run_replicates(const ExperimentSpec& spec) {
    spec.validate();
    ExperimentReport report;
    report.spec = spec;
    report.rows = run_cell(spec, spec.ns.front(), spec.contamination);
    sort_rows(report.rows);
    report.aggregates = aggregate_cell(report.rows, spec, spec.ns.front(),
                                       spec.contamination.proportion, spec.resolved_beta_star());
    return report;
}

ExperimentReport bias_curve(const ExperimentSpec& spec) {
    spec.validate();
    ExperimentReport report;
    report.spec = spec;
    const Eigen::VectorXd beta_star = spec.resolved_beta_star();
    std::vector<double> sweep = spec.proportion_sweep;
    std::sort(sweep.begin(), sweep.end());
    for (double prop : sweep) {
        ContaminationSpec cell = spec.contamination;
        cell.proportion = prop;
        cell.count.reset();
        std::vector<ReplicateRow> rows = run_cell(spec, spec.ns.front(), cell);
        std::vector<AggregateRow> aggs =
            aggregate_cell(rows, spec, spec.ns.front(), prop, beta_star);
        report.rows.insert(report.rows.end(), std::make_move_iterator(rows.begin()),
                           std::make_move_iterator(rows.end()));
        report.aggregates.insert(report.aggregates.end(), std::make_move_iterator(aggs.begin()),
                                 std::make_move_iterator(aggs.end()));
    }
    sort_rows(report.rows);
    return report;
}

ExperimentReport mse_distribution(const ExperimentSpec& spec) { return run_replicates(spec); }

ExperimentReport rate_experiment(const ExperimentSpec& spec) {
    spec.validate();
    ExperimentReport report;
    report.spec = spec;
    const Eigen::VectorXd beta_star = spec.resolved_beta_star();
    std::vector<long> ns = spec.ns;
    std::sort(ns.begin(), ns.end());
    for (long n : ns) {
        std::vector<ReplicateRow> rows = run_cell(spec, n, spec.contamination);
        std::vector<AggregateRow> aggs =
            aggregate_cell(rows, spec, n, spec.contamination.proportion, beta_star);
        report.rows.insert(report.rows.end(), std::make_move_iterator(rows.begin()),
                           std::make_move_iterator(rows.end()));
        report.aggregates.insert(report.aggregates.end(), std::make_move_iterator(aggs.begin()),
                                 std::make_move_iterator(aggs.end()));
    }
    sort_rows(report.rows);
    return report;
}

TraceReport convergence_trace_experiment(const ExperimentSpec& spec) {
    spec.validate();
    TraceReport report;
    report.spec = spec;
    const long n = spec.ns.front();
    const Eigen::VectorXd beta_star = spec.resolved_beta_star();
    const long o = spec.contamination.resolve_count(n);
    const long n_estimators = static_cast<long>(spec.estimators.size());
    const int iters = spec.trace_iterations;

    std::vector<FitConfig> configs;
    for (const EstimatorSpec& est : spec.estimators) {
        configs.push_back(resolve_fit_config(est, spec.fit_template, n, o));
    }

    const long rows_per_rep = n_estimators * (iters + 1);
    report.rows.resize(static_cast<std::size_t>(spec.replicates * rows_per_rep));
    parallel_for(spec.replicates, [&](long r) {
        const auto [data, truth] =
            generate_dataset(n, beta_star, spec.design, spec.noise, spec.contamination,
                             mix_seed(spec.base_seed, static_cast<std::uint64_t>(r)));
        const LadFit lad = fit_lad(data, Eigen::VectorXd::Zero(data.p()),
                                   spec.fit_template.algorithm1_c,
                                   spec.fit_template.lad_max_iters);
        for (long e = 0; e < n_estimators; ++e) {
            OptimizerConfig oc = configs[static_cast<std::size_t>(e)].optimizer;
            oc.method = OptimMethod::gradient_descent;
            oc.record_iterates = true;
            oc.max_iters = iters;
            const Objective obj =
                make_loss_objective(data, configs[static_cast<std::size_t>(e)].loss);
            const MinimizeResult m = minimize(obj, lad.beta, oc);

            double last_error = (lad.beta - beta_star).norm();
            std::size_t base = static_cast<std::size_t>(r * rows_per_rep + e * (iters + 1));
            for (int k = 0; k <= iters; ++k) {
                if (k < static_cast<int>(m.trace.entries.size()) && m.trace.entries[k].point) {
                    last_error = (*m.trace.entries[k].point - beta_star).norm();
                }
                TraceRow& row = report.rows[base + static_cast<std::size_t>(k)];
                row.replicate = r;
                row.estimator = spec.estimators[static_cast<std::size_t>(e)].name;
                row.iteration = k;
                row.error = last_error;
            }
        }
    });

    std::sort(report.rows.begin(), report.rows.end(), [](const TraceRow& a, const TraceRow& b) {
        if (a.replicate != b.replicate) return a.replicate < b.replicate;
        if (a.estimator != b.estimator) return a.estimator < b.estimator;
        return a.iteration < b.iteration;
    });
    return report;
}

double ks_statistic_vs_normal(Eigen::VectorXd sample) {
    const long n = sample.size();
    if (n < 1) throw ConfigError("ks_statistic_vs_normal: empty sample");
    std::sort(sample.data(), sample.data() + n);
    double d = 0.0;
    for (long i = 0; i < n; ++i) {
        const double cdf = std_normal_cdf(sample[i]);
        const double lo = static_cast<double>(i) / static_cast<double>(n);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
        d = std::max(d, std::max(cdf - lo, hi - cdf));
    }
    return d;
}

NormalityReport normality_experiment(long n, long p, long replicates, std::uint64_t base_seed) {
    if (n < 2 || p < 1 || replicates < 2) {
        throw ConfigError("normality_experiment: need n >= 2, p >= 1, replicates >= 2");
    }
    NormalityReport report;
    report.n = n;
    report.p = p;
    report.replicates = replicates;
    report.base_seed = base_seed;
    report.tau = std::log(static_cast<double>(n)) / static_cast<double>(n);

    const Eigen::VectorXd beta_star =
        Eigen::VectorXd::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));
    const NoiseSpec noise;           // gaussian
    const ContaminationSpec clean;   // theta = 0
    FitConfig cfg;
    cfg.loss = LossSpec::welsch(report.tau);

    report.scaled_deviations.resize(replicates, p);
    const double root_n = std::sqrt(static_cast<double>(n));
    parallel_for(replicates, [&](long r) {
        const auto [data, truth] =
            generate_dataset(n, beta_star, DesignKind::gaussian_isotropic, noise, clean,
                             mix_seed(base_seed, static_cast<std::uint64_t>(r)));
        const FitResult fit = fit_two_stage(data, cfg);
        report.scaled_deviations.row(r) = (root_n * (fit.beta - beta_star)).transpose();
    });

    report.coord_mean = report.scaled_deviations.colwise().mean();
    Eigen::MatrixXd centered =
        report.scaled_deviations.rowwise() - report.coord_mean.transpose();
    report.covariance =
        centered.transpose() * centered / static_cast<double>(replicates - 1);
    report.coord_variance = report.covariance.diagonal();
    report.ks_statistic.resize(p);
    for (long j = 0; j < p; ++j) {
        report.ks_statistic[j] = ks_statistic_vs_normal(report.scaled_deviations.col(j));
    }
    return report;
}

}  // namespace welsch
