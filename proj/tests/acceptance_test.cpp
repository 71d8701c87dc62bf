// Acceptance suite: end-to-end statistical checks at desk scale. Each test
// prints one PASS/FAIL line with its headline numbers and elapsed time.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "welsch/csv_io.hpp"
#include "welsch/diagnostics.hpp"
#include "welsch/estimators.hpp"
#include "welsch/experiment_config.hpp"
#include "welsch/numeric.hpp"
#include "welsch/rng.hpp"
#include "welsch/simulation.hpp"
#include "welsch_cli.hpp"
#include "test_support.hpp"

namespace welsch {
namespace {

class Criterion {
  public:
    Criterion(int index, std::string name, double budget_seconds)
        : index_(index), name_(std::move(name)), budget_(budget_seconds),
          start_(std::chrono::steady_clock::now()) {}

    void expect(bool condition, const std::string& what) {
        EXPECT_TRUE(condition) << "criterion " << index_ << ": " << what;
        if (!condition) {
            pass_ = false;
            details_ += (details_.empty() ? "" : "; ") + what;
        }
    }

    ~Criterion() {
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        EXPECT_LE(elapsed, budget_) << "criterion " << index_ << " runtime budget";
        std::printf("[ACCEPTANCE] %2d %-24s %s (%.1fs/%.0fs)%s%s\n", index_, name_.c_str(),
                    pass_ && elapsed <= budget_ ? "PASS" : "FAIL", elapsed, budget_,
                    details_.empty() ? "" : " -- ", details_.c_str());
        std::fflush(stdout);
    }

  private:
    int index_;
    std::string name_;
    double budget_;
    std::chrono::steady_clock::time_point start_;
    bool pass_ = true;
    std::string details_;
};

std::string temp_path(const std::string& name) { return ::testing::TempDir() + name; }

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv = {"welsch"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

Eigen::VectorXd unit_beta(long p) {
    return Eigen::VectorXd::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));
}

const AggregateRow& find_aggregate(const ExperimentReport& report, const std::string& estimator,
                                   double proportion, long n) {
    for (const AggregateRow& agg : report.aggregates) {
        if (agg.estimator == estimator && agg.proportion == proportion && agg.n == n) return agg;
    }
    throw std::runtime_error("aggregate not found: " + estimator);
}

TEST(Acceptance, Criterion01CalculusCorrectness) {
    Criterion crit(1, "calculus correctness", 10.0);
    Rng rng(1001);
    int probes = 0;
    double worst_grad = 0.0, worst_hess = 0.0;
    while (probes < 100) {
        const long p = 2 + static_cast<long>(rng.uniform_index(4));
        const long n = 30 + static_cast<long>(rng.uniform_index(70));
        Dataset data = test::make_gaussian_dataset(n, unit_beta(p), 1.0, rng.next_u64());
        const double tau = std::pow(10.0, rng.uniform01() * 3.0 - 2.0);
        const Objective obj = make_loss_objective(data, LossSpec::welsch(tau));
        for (int probe = 0; probe < 5 && probes < 100; ++probe, ++probes) {
            Eigen::VectorXd beta(p);
            for (long j = 0; j < p; ++j) beta[j] = rng.uniform01() * 4.0 - 2.0;

            Eigen::VectorXd analytic(p);
            obj(beta, analytic);
            const Eigen::VectorXd fd_grad = finite_diff_gradient(obj, beta, 1e-6);
            worst_grad = std::max(worst_grad, (analytic - fd_grad).norm() /
                                                  std::max(1.0, analytic.norm()));

            const Eigen::MatrixXd hess = welsch_hessian(data, beta, tau);
            Eigen::MatrixXd fd_hess(p, p);
            Eigen::VectorXd gp(p), gm(p), point(p);
            for (long j = 0; j < p; ++j) {
                point = beta;
                point[j] += 1e-6;
                obj(point, gp);
                point[j] -= 2e-6;
                obj(point, gm);
                fd_hess.col(j) = (gp - gm) / 2e-6;
            }
            fd_hess = 0.5 * (fd_hess + fd_hess.transpose()).eval();
            double entry_err = 0.0;
            for (long a = 0; a < p; ++a) {
                for (long b = 0; b < p; ++b) {
                    entry_err = std::max(entry_err, std::abs(hess(a, b) - fd_hess(a, b)) /
                                                        std::max(1.0, std::abs(hess(a, b))));
                }
            }
            worst_hess = std::max(worst_hess, entry_err);
        }
    }
    crit.expect(worst_grad <= 1e-5, "gradient FD mismatch " + format_double(worst_grad));
    crit.expect(worst_hess <= 1e-5, "hessian FD mismatch " + format_double(worst_hess));
}

TEST(Acceptance, Criterion02TauToZeroLimit) {
    Criterion crit(2, "tau->0 limit", 10.0);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Dataset data = test::make_gaussian_dataset(200, unit_beta(5), 1.0, 2000 + seed);
        const Eigen::VectorXd ols = fit_ols(data);
        const FitResult fit =
            fit_welsch(data, 1e-8, Eigen::VectorXd::Zero(5), OptimizerConfig{});
        worst = std::max(worst, (fit.beta - ols).norm());
    }
    crit.expect(worst <= 1e-4, "max ||welsch(1e-8) - ols|| = " + format_double(worst));
}

TEST(Acceptance, Criterion03BasinConvexity) {
    Criterion crit(3, "basin convexity", 120.0);
    const long n = 500, p = 5, o = 25;
    const double tau = theoretical_tau(n, o, 0.05, 2.0, 1.0, TauMode::prop2);
    NoiseSpec noise;
    noise.kind = NoiseSpec::Kind::pareto;
    ContaminationSpec cont;
    cont.proportion = 0.05;
    cont.magnitude = 100.0;
    cont.strategy = AdversaryStrategy::sign_aligned;
    const Eigen::VectorXd beta_star = unit_beta(p);

    int convex_datasets = 0;
    for (int s = 0; s < 100; ++s) {
        const auto [data, truth] = generate_dataset(n, beta_star,
                                                    DesignKind::gaussian_isotropic, noise, cont,
                                                    mix_seed(3001, s));
        Rng rng(mix_seed(3002, s));
        bool all_positive = true;
        for (int k = 0; k < 50 && all_positive; ++k) {
            Eigen::VectorXd point(p);
            for (long j = 0; j < p; ++j) point[j] = rng.gaussian();
            point *= 0.5 * std::pow(rng.uniform01(), 0.2) / point.norm();
            point += beta_star;
            if (hessian_min_eigenvalue(data, point, tau) <= 0.0) all_positive = false;
        }
        if (all_positive) ++convex_datasets;
    }
    crit.expect(convex_datasets >= 95,
                "strictly convex on the half ball in " + std::to_string(convex_datasets) +
                    "/100 datasets");
}

TEST(Acceptance, Criterion04BiasCurve) {
    Criterion crit(4, "bias curve ordering", 600.0);
    const ExperimentSpec spec = preset_experiment("fig1a-desk");
    const ExperimentReport report = bias_curve(spec);
    const std::vector<double> props = {0.02, 0.04, 0.06, 0.08, 0.10};

    double welsch_max = 0.0;
    bool huber_increasing = true;
    double prev_huber = -1.0;
    bool qr_dominates = true;
    for (double prop : props) {
        const double welsch = find_aggregate(report, "welsch", prop, 1000).bias;
        const double huber = find_aggregate(report, "huber", prop, 1000).bias;
        const double qr = find_aggregate(report, "quantile_0.5", prop, 1000).bias;
        welsch_max = std::max(welsch_max, welsch);
        if (huber <= prev_huber) huber_increasing = false;
        prev_huber = huber;
        if (prop >= 0.04 - 1e-12 && qr < welsch) qr_dominates = false;
    }
    const double welsch_10 = find_aggregate(report, "welsch", 0.10, 1000).bias;
    const double huber_10 = find_aggregate(report, "huber", 0.10, 1000).bias;

    crit.expect(welsch_max <= 0.05, "max welsch bias " + format_double(welsch_max));
    crit.expect(huber_increasing, "huber bias not strictly increasing");
    crit.expect(huber_10 >= 5.0 * welsch_10,
                "huber/welsch bias ratio at 0.10 = " + format_double(huber_10 / welsch_10));
    crit.expect(qr_dominates, "median regression bias fell below welsch");
}

TEST(Acceptance, Criterion05DebiasUnderLargeOutliers) {
    Criterion crit(5, "debias property", 180.0);
    ExperimentSpec spec = preset_experiment("debias-desk");

    ExperimentSpec clean = spec;
    clean.contamination.proportion = 0.0;
    const ExperimentReport clean_report = mse_distribution(clean);
    const ExperimentReport dirty_report = mse_distribution(spec);

    const double clean_median = clean_report.aggregates.front().median_err;
    const double dirty_median = dirty_report.aggregates.front().median_err;
    crit.expect(dirty_median <= 1.5 * clean_median,
                "median error ratio contaminated/clean = " +
                    format_double(dirty_median / clean_median));
}

TEST(Acceptance, Criterion06RateScaling) {
    Criterion crit(6, "rate scaling", 180.0);
    const ExperimentSpec spec = preset_experiment("rate-desk");
    const ExperimentReport report = rate_experiment(spec);
    const double err_500 = find_aggregate(report, "welsch", 0.0, 500).median_err;
    const double err_2000 = find_aggregate(report, "welsch", 0.0, 2000).median_err;
    const double ratio = err_2000 / err_500;
    crit.expect(ratio >= 0.4 && ratio <= 0.6,
                "median error ratio n=2000/n=500 = " + format_double(ratio));
}

TEST(Acceptance, Criterion07MseOrdering) {
    Criterion crit(7, "mse ordering", 600.0);
    const ExperimentReport fig5 = mse_distribution(preset_experiment("fig5-desk"));
    const double welsch_mse = find_aggregate(fig5, "welsch", 0.10, 1000).median_sq_err;
    const double huber_mse = find_aggregate(fig5, "huber", 0.10, 1000).median_sq_err;
    crit.expect(welsch_mse < huber_mse,
                "10% outliers: welsch " + format_double(welsch_mse) + " vs huber " +
                    format_double(huber_mse));

    const ExperimentReport fig7 = mse_distribution(preset_experiment("fig7-desk"));
    const double welsch_20 = find_aggregate(fig7, "welsch", 0.20, 1000).median_sq_err;
    const double tukey_20 = find_aggregate(fig7, "tukey", 0.20, 1000).median_sq_err;
    const double hampel_20 = find_aggregate(fig7, "hampel", 0.20, 1000).median_sq_err;
    crit.expect(welsch_20 <= 1.1 * std::min(tukey_20, hampel_20),
                "20% outliers: welsch " + format_double(welsch_20) + " vs best redescender " +
                    format_double(std::min(tukey_20, hampel_20)));
}

TEST(Acceptance, Criterion08ConvergenceTraces) {
    Criterion crit(8, "convergence traces", 120.0);
    const ExperimentSpec spec = preset_experiment("fig4-desk");
    const TraceReport report = convergence_trace_experiment(spec);
    const int iters = spec.trace_iterations;
    const long reps = spec.replicates;

    std::map<std::string, std::vector<double>> mean_trace;
    std::map<std::string, std::vector<double>> final_error;
    for (const TraceRow& row : report.rows) {
        auto& trace = mean_trace[row.estimator];
        trace.resize(static_cast<std::size_t>(iters + 1), 0.0);
        trace[static_cast<std::size_t>(row.iteration)] += row.error / static_cast<double>(reps);
        if (row.iteration == iters) final_error[row.estimator].push_back(row.error);
    }

    bool monotone = true;
    for (const auto& [name, trace] : mean_trace) {
        for (std::size_t k = 6; k < trace.size(); ++k) {
            if (trace[k] > trace[k - 1] * (1.0 + 1e-9)) monotone = false;
        }
    }
    crit.expect(monotone, "mean error traces increase after iteration 5");

    int welsch_wins = 0;
    for (long r = 0; r < reps; ++r) {
        if (final_error["welsch"][static_cast<std::size_t>(r)] <=
            final_error["huber"][static_cast<std::size_t>(r)]) {
            ++welsch_wins;
        }
    }
    crit.expect(welsch_wins >= 40, "welsch final error won in " + std::to_string(welsch_wins) +
                                       "/50 seeds");
}

TEST(Acceptance, Criterion09AsymptoticNormality) {
    Criterion crit(9, "asymptotic normality", 600.0);
    const NormalityReport report = normality_experiment(5000, 3, 1000, 1);
    for (long j = 0; j < 3; ++j) {
        crit.expect(std::abs(report.coord_mean[j]) <= 0.1,
                    "coordinate " + std::to_string(j) + " mean " +
                        format_double(report.coord_mean[j]));
        crit.expect(report.coord_variance[j] >= 0.85 && report.coord_variance[j] <= 1.15,
                    "coordinate " + std::to_string(j) + " variance " +
                        format_double(report.coord_variance[j]));
        crit.expect(report.ks_statistic[j] <= 0.06,
                    "coordinate " + std::to_string(j) + " KS " +
                        format_double(report.ks_statistic[j]));
    }
    for (long a = 0; a < 3; ++a) {
        for (long b = a + 1; b < 3; ++b) {
            crit.expect(std::abs(report.covariance(a, b)) <= 0.1,
                        "covariance (" + std::to_string(a) + "," + std::to_string(b) + ") = " +
                            format_double(report.covariance(a, b)));
        }
    }
}

double test_median_abs_residual(const std::string& residual_csv) {
    std::ifstream in(residual_csv);
    std::string line;
    std::getline(in, line);  // header: row,split,y,prediction,residual
    std::vector<double> abs_residuals;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() == 5 && cells[1] == "test") {
            abs_residuals.push_back(std::abs(std::strtod(cells[4].c_str(), nullptr)));
        }
    }
    return median_inplace(abs_residuals);
}

TEST(Acceptance, Criterion10RealDataPipeline) {
    Criterion crit(10, "real-data pipeline", 120.0);
    // honor a real abalone CSV when provided; otherwise run the pipeline on
    // the deterministic fixture with the same schema
    std::string data_path;
    if (const char* env = std::getenv("WELSCH_ABALONE_CSV")) data_path = env;
    if (data_path.empty() || !std::filesystem::exists(data_path)) {
        data_path = temp_path("abalone_fixture.csv");
        test::write_abalone_like_csv(data_path, 4177, 7);
    }

    const std::string welsch_prefix = temp_path("abalone_welsch");
    const std::string huber_prefix = temp_path("abalone_huber");
    const std::vector<std::string> common = {"fit",          "--data",     data_path,
                                             "--target",     "rings",      "--drop-non-numeric",
                                             "--holdout",    "0.2",        "--split-seed",
                                             "7",            "--seed",     "7"};
    std::vector<std::string> welsch_args = common;
    welsch_args.insert(welsch_args.end(),
                       {"--loss", "welsch", "--tau", "auto", "--out-prefix", welsch_prefix});
    std::vector<std::string> huber_args = common;
    huber_args.insert(huber_args.end(),
                      {"--loss", "huber", "--gamma", "auto", "--out-prefix", huber_prefix});

    crit.expect(run_cli(welsch_args) == 0, "welsch pipeline exit code");
    crit.expect(run_cli(huber_args) == 0, "huber pipeline exit code");

    const std::string welsch_resid = welsch_prefix + "_residuals.csv";
    const std::string huber_resid = huber_prefix + "_residuals.csv";
    crit.expect(std::filesystem::exists(welsch_resid) && std::filesystem::exists(huber_resid),
                "residual CSVs missing");
    const double welsch_med = test_median_abs_residual(welsch_resid);
    const double huber_med = test_median_abs_residual(huber_resid);
    crit.expect(welsch_med <= 1.1 * huber_med,
                "test median |residual|: welsch " + format_double(welsch_med) + " vs huber " +
                    format_double(huber_med));
}

TEST(Acceptance, Criterion11Determinism) {
    Criterion crit(11, "determinism", 300.0);
    struct PresetRun {
        const char* subcommand;
        const char* preset;
        std::vector<std::string> extra;
    };
    const PresetRun runs[] = {
        {"bias-curve", "fig1a-desk", {"--replicates", "4", "--n", "200"}},
        {"bias-curve", "fig1b-desk", {"--replicates", "4", "--n", "200"}},
        {"mse", "fig5-desk", {"--replicates", "4", "--n", "200"}},
        {"mse", "fig7-desk", {"--replicates", "4", "--n", "200"}},
        {"mse", "debias-desk", {"--replicates", "4", "--n", "200"}},
        {"trace", "fig4-desk", {"--replicates", "2", "--n", "200"}},
        {"rate", "rate-desk", {"--replicates", "4"}},
        {"normality", "normality-desk", {"--replicates", "6", "--n", "300"}},
    };
    for (const PresetRun& run : runs) {
        const std::string out_a = temp_path(std::string("det_") + run.preset + "_a.csv");
        const std::string out_b = temp_path(std::string("det_") + run.preset + "_b.csv");
        std::vector<std::string> args_a = {run.subcommand, "--preset", run.preset, "--seed", "5"};
        args_a.insert(args_a.end(), run.extra.begin(), run.extra.end());
        std::vector<std::string> args_b = args_a;
        args_a.insert(args_a.end(), {"--out", out_a});
        args_b.insert(args_b.end(), {"--out", out_b});
        crit.expect(run_cli(args_a) == 0, std::string(run.preset) + " first run failed");
        crit.expect(run_cli(args_b) == 0, std::string(run.preset) + " second run failed");
        const std::string body_a = read_text(out_a);
        crit.expect(!body_a.empty() && body_a == read_text(out_b),
                    std::string(run.preset) + " reruns differ");
        crit.expect(read_text(out_a + ".provenance.json") ==
                        read_text(out_b + ".provenance.json"),
                    std::string(run.preset) + " provenance differs");
    }
}

TEST(Acceptance, Criterion12DiagnosticsCoherence) {
    Criterion crit(12, "diagnostics coherence", 120.0);
    const long n = 1000, o = 50;
    NoiseSpec noise;
    noise.kind = NoiseSpec::Kind::pareto;
    noise.pareto_shape = 2.5;
    ContaminationSpec cont;
    cont.proportion = 0.05;
    cont.magnitude = 100.0;
    cont.strategy = AdversaryStrategy::random_shift;
    const Eigen::VectorXd beta_star = unit_beta(5);

    const double alpha = 2.5;
    const double mean = alpha / (alpha - 1.0);
    const double sd = std::sqrt(alpha / ((alpha - 1.0) * (alpha - 1.0) * (alpha - 2.0)));
    auto tail = [&](double t) {
        double right = std::pow(mean + sd * t, -alpha);
        double left = 0.0;
        if (mean - sd * t > 1.0) left = 1.0 - std::pow(mean - sd * t, -alpha);
        return right + left;
    };

    const int reps = 30;
    bool monotone = true;
    for (int r = 0; r < reps; ++r) {
        const auto [data, truth] = generate_dataset(n, beta_star,
                                                    DesignKind::gaussian_isotropic, noise, cont,
                                                    mix_seed(1200, r));
        long prev = -1;
        for (double tau : {0.001, 0.01, 0.1}) {
            const long count = augmented_outlier_count(data, truth, tau);
            if (count < prev) monotone = false;
            prev = count;
        }
    }
    crit.expect(monotone, "o' decreased along the tau grid");

    for (double tau : {0.001, 0.01, 0.1}) {
        const double q = tail(1.0 / std::sqrt(2.0 * tau));
        long total_excess = 0;
        for (int r = 0; r < reps; ++r) {
            const auto [data, truth] = generate_dataset(n, beta_star,
                                                        DesignKind::gaussian_isotropic, noise,
                                                        cont, mix_seed(1200, r));
            total_excess += augmented_outlier_count(data, truth, tau) - o;
        }
        const double expected = static_cast<double>(reps) * static_cast<double>(n - o) * q;
        const double sigma = std::sqrt(static_cast<double>(reps) * (n - o) * q * (1.0 - q));
        crit.expect(std::abs(static_cast<double>(total_excess) - expected) <= 3.0 * sigma + 1.0,
                    "tau " + format_double(tau) + ": excess " + std::to_string(total_excess) +
                        " vs predicted " + format_double(expected));
    }
}

}  // namespace
}  // namespace welsch
