#include "welsch_cli.hpp"

#include <cstdlib>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "welsch/csv_io.hpp"
#include "welsch/diagnostics.hpp"
#include "welsch/errors.hpp"
#include "welsch/estimators.hpp"
#include "welsch/experiment_config.hpp"
#include "welsch/model_selection.hpp"
#include "welsch/numeric.hpp"
#include "welsch/rng.hpp"
#include "welsch/simulation.hpp"
#include "welsch/version.hpp"

namespace welsch {

namespace {

using nlohmann::json;

// WELSCH_OUT_DIR prefixes relative output paths when set.
std::string resolve_out(const std::string& path) {
    if (path.empty() || path.front() == '/') return path;
    const char* dir = std::getenv("WELSCH_OUT_DIR");
    if (!dir || !*dir) return path;
    std::string base(dir);
    if (base.back() != '/') base += '/';
    return base + path;
}

struct CsvOptions {
    std::string data_path;
    std::string target = "y";
    std::string delimiter = ",";
    bool drop_non_numeric = false;
    bool no_standardize = false;
    bool no_intercept = false;
};

void add_csv_options(CLI::App* cmd, CsvOptions& opts) {
    cmd->add_option("--data", opts.data_path, "input CSV path")->required();
    cmd->add_option("--target", opts.target, "target column name (default y)");
    cmd->add_option("--delimiter", opts.delimiter, "cell delimiter (default ,)");
    cmd->add_flag("--drop-non-numeric", opts.drop_non_numeric,
                  "drop non-numeric feature columns instead of failing");
    cmd->add_flag("--no-standardize", opts.no_standardize, "skip feature standardization");
    cmd->add_flag("--no-intercept", opts.no_intercept, "skip the leading intercept column");
}

std::pair<Dataset, TransformRecord> load_from_options(const CsvOptions& opts) {
    if (opts.delimiter.size() != 1) throw ConfigError("--delimiter must be a single character");
    TabularFile file;
    file.path = opts.data_path;
    file.target = opts.target;
    file.delimiter = opts.delimiter[0];
    file.drop_non_numeric = opts.drop_non_numeric;
    return load_csv(file, !opts.no_standardize, !opts.no_intercept);
}

struct LossOptions {
    std::string loss = "welsch";
    std::string tau = "auto";
    std::string gamma = "auto";
    std::string tukey_c = "auto";
    std::string hampel_a = "auto";
    double quantile = 0.5;
};

void add_loss_options(CLI::App* cmd, LossOptions& opts) {
    cmd->add_option("--loss", opts.loss, "loss family: welsch|huber|tukey|hampel|quantile|lad|ols");
    cmd->add_option("--tau", opts.tau, "welsch tau, a number or 'auto' (median CV)");
    cmd->add_option("--gamma", opts.gamma, "huber gamma, a number or 'auto'");
    cmd->add_option("--tukey-c", opts.tukey_c, "tukey cutoff, a number or 'auto'");
    cmd->add_option("--hampel-a", opts.hampel_a,
                    "hampel corner a (b, r keep the 1:2:4 default ratios), a number or 'auto'");
    cmd->add_option("--quantile", opts.quantile, "pinball quantile level in (0,1)");
}

struct ResolvedLoss {
    LossSpec spec;
    bool wants_cv = false;  // scale constant marked auto
};

double parse_positive(const std::string& text, const std::string& flag) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || !(v > 0)) {
        throw ConfigError(flag + ": expected a positive number or 'auto', got '" + text + "'");
    }
    return v;
}

ResolvedLoss resolve_loss(const LossOptions& opts) {
    ResolvedLoss out;
    const LossFamily family = loss_family_from_string(opts.loss);
    switch (family) {
        case LossFamily::welsch:
            out.wants_cv = opts.tau == "auto";
            out.spec = LossSpec::welsch(out.wants_cv ? 1.0 : parse_positive(opts.tau, "--tau"));
            break;
        case LossFamily::huber:
            out.wants_cv = opts.gamma == "auto";
            out.spec =
                LossSpec::huber(out.wants_cv ? 1.0 : parse_positive(opts.gamma, "--gamma"));
            break;
        case LossFamily::tukey:
            out.wants_cv = opts.tukey_c == "auto";
            out.spec =
                LossSpec::tukey(out.wants_cv ? 4.685 : parse_positive(opts.tukey_c, "--tukey-c"));
            break;
        case LossFamily::hampel: {
            out.wants_cv = opts.hampel_a == "auto";
            const double a = out.wants_cv ? 2.0 : parse_positive(opts.hampel_a, "--hampel-a");
            out.spec = LossSpec::hampel(a, 2.0 * a, 4.0 * a);
            break;
        }
        case LossFamily::pinball:
            out.spec = LossSpec::pinball(opts.quantile);
            break;
        case LossFamily::absolute:
            out.spec = LossSpec::absolute();
            break;
        case LossFamily::squared:
            out.spec = LossSpec::squared();
            break;
    }
    return out;
}

json loss_to_provenance(const LossSpec& loss) {
    json j;
    j["family"] = to_string(loss.family);
    j["tau"] = loss.tau;
    j["gamma"] = loss.gamma;
    j["c"] = loss.c;
    j["a"] = loss.a;
    j["b"] = loss.b;
    j["r"] = loss.r;
    j["q"] = loss.q;
    return j;
}

// Seeded shuffle split: the first n - floor(fraction n) shuffled rows train.
std::pair<std::vector<long>, std::vector<long>> holdout_split(long n, double fraction,
                                                              std::uint64_t seed) {
    std::vector<long> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0L);
    Rng rng(seed);
    rng.shuffle(order);
    const long test_size = static_cast<long>(std::floor(fraction * static_cast<double>(n)));
    std::vector<long> train(order.begin(), order.end() - test_size);
    std::vector<long> test(order.end() - test_size, order.end());
    return {std::move(train), std::move(test)};
}

Dataset take_rows(const Dataset& data, const std::vector<long>& rows) {
    Dataset out;
    out.X.resize(static_cast<long>(rows.size()), data.p());
    out.y.resize(static_cast<long>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.X.row(static_cast<long>(i)) = data.X.row(rows[i]);
        out.y[static_cast<long>(i)] = data.y[rows[i]];
    }
    return out;
}

int run_fit(const CsvOptions& csv_opts, const LossOptions& loss_opts, double holdout,
            std::uint64_t split_seed, int folds, std::uint64_t cv_seed, const std::string& scale,
            double c, int lad_max_iters, const std::string& out_prefix, std::uint64_t seed) {
    auto [data, record] = load_from_options(csv_opts);
    ResolvedLoss loss = resolve_loss(loss_opts);

    FitConfig cfg;
    cfg.loss = loss.spec;
    cfg.algorithm1_c = c;
    cfg.lad_max_iters = lad_max_iters;
    if (scale == "mad") cfg.scale_mode = ScaleMode::mad_of_lad_residuals;
    else if (scale == "unit") cfg.scale_mode = ScaleMode::fixed_unit;
    else throw ConfigError("--scale-mode: expected mad or unit");

    std::vector<long> train_rows, test_rows;
    if (holdout > 0) {
        if (!(holdout < 1)) throw ConfigError("--holdout must lie in [0, 1)");
        std::tie(train_rows, test_rows) = holdout_split(data.n(), holdout, split_seed);
    } else {
        train_rows.resize(static_cast<std::size_t>(data.n()));
        std::iota(train_rows.begin(), train_rows.end(), 0L);
    }
    const Dataset train = take_rows(data, train_rows);

    std::optional<CvResult> cv;
    if (loss.wants_cv) {
        CvSpec cv_spec;
        cv_spec.folds = folds;
        cv_spec.grid = default_grid(cfg.loss.family, train.n(), train.p());
        cv_spec.shuffle_seed = cv_seed == 0 ? seed : cv_seed;
        cv = median_cv(train, cfg.loss.family, cv_spec, cfg);
        cfg.loss = apply_cv_candidate(cfg.loss, cv->chosen);
        std::cout << "selected " << to_string(cfg.loss.family) << " constant by median CV: "
                  << format_double(cv->chosen) << "\n";
    }

    FitResult fit;
    Eigen::VectorXd beta;
    if (cfg.loss.family == LossFamily::squared) {
        beta = fit_ols(train);
    } else {
        fit = fit_two_stage(train, cfg);
        beta = fit.beta;
        std::cout << "status: " << to_string(fit.status)
                  << (fit.stage1_criterion_met ? "" : " (stage-1 median criterion not met)")
                  << ", stage1_iters: " << fit.stage1_iters
                  << ", stage2_iters: " << fit.stage2_iters << ", scale: "
                  << format_double(fit.scale) << "\n";
    }

    const auto [beta_orig, offset] = record.to_original_units(beta);
    std::vector<std::vector<std::string>> coef_rows;
    for (long j = 0; j < beta.size(); ++j) {
        coef_rows.push_back({record.feature_names[static_cast<std::size_t>(j)],
                             format_double(beta[j]), format_double(beta_orig[j])});
    }
    if (offset != 0.0) {
        coef_rows.push_back({"(offset)", "0", format_double(offset)});
    }
    const std::string coef_path = resolve_out(out_prefix + "_coefficients.csv");
    write_csv(coef_path, {"term", "coefficient", "coefficient_original_units"}, coef_rows);

    const Eigen::VectorXd pred = data.X * beta;
    std::vector<std::vector<std::string>> resid_rows;
    std::vector<double> test_abs_residuals;
    std::vector<char> is_test(static_cast<std::size_t>(data.n()), 0);
    for (long row : test_rows) is_test[static_cast<std::size_t>(row)] = 1;
    for (long i = 0; i < data.n(); ++i) {
        const double r = data.y[i] - pred[i];
        const bool test = is_test[static_cast<std::size_t>(i)] != 0;
        if (test) test_abs_residuals.push_back(std::abs(r));
        resid_rows.push_back({std::to_string(i), test ? "test" : "train", format_double(data.y[i]),
                              format_double(pred[i]), format_double(r)});
    }
    const std::string resid_path = resolve_out(out_prefix + "_residuals.csv");
    write_csv(resid_path, {"row", "split", "y", "prediction", "residual"}, resid_rows);

    json prov;
    prov["subcommand"] = "fit";
    prov["data"] = csv_opts.data_path;
    prov["target"] = csv_opts.target;
    prov["standardize"] = !csv_opts.no_standardize;
    prov["intercept"] = !csv_opts.no_intercept;
    prov["drop_non_numeric"] = csv_opts.drop_non_numeric;
    prov["loss"] = loss_to_provenance(cfg.loss);
    prov["algorithm1_c"] = c;
    prov["lad_max_iters"] = lad_max_iters;
    prov["scale_mode"] = scale;
    prov["holdout"] = holdout;
    prov["split_seed"] = split_seed;
    prov["cv_folds"] = folds;
    prov["seed"] = seed;
    write_provenance(coef_path, prov.dump(2));
    write_provenance(resid_path, prov.dump(2));

    if (cv) {
        const std::string cv_path = resolve_out(out_prefix + "_cv.csv");
        write_cv_csv(*cv, cv_path);
        write_provenance(cv_path, prov.dump(2));
    }

    if (!test_rows.empty()) {
        std::vector<double> abs_res = test_abs_residuals;
        std::cout << "test_median_abs_residual: " << format_double(median_inplace(abs_res))
                  << " over " << test_rows.size() << " held-out rows\n";
    }
    std::cout << "wrote " << coef_path << " and " << resid_path << "\n";
    return 0;
}

struct ExperimentFlags {
    std::string preset;
    std::string config_path;
    std::optional<long> n;
    std::optional<long> p;
    std::optional<long> replicates;
    std::optional<std::uint64_t> seed;
    std::optional<double> proportion;
    std::optional<double> magnitude;
    std::optional<std::string> strategy;
    std::optional<std::string> noise;
    std::string out = "report.csv";
    std::string rows_out;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& flags, const std::string& default_preset) {
    flags.preset = default_preset;
    cmd->add_option("--preset", flags.preset, "named preset (default " + default_preset + ")");
    cmd->add_option("--config", flags.config_path, "JSON config overriding the preset per key");
    cmd->add_option("--n", flags.n, "override sample size");
    cmd->add_option("--p", flags.p, "override dimension");
    cmd->add_option("--replicates", flags.replicates, "override replicate count");
    cmd->add_option("--seed", flags.seed, "override base seed");
    cmd->add_option("--proportion", flags.proportion, "override outlier proportion");
    cmd->add_option("--magnitude", flags.magnitude, "override outlier magnitude");
    cmd->add_option("--strategy", flags.strategy,
                    "override adversary strategy: random_shift|sign_aligned|response_flip");
    cmd->add_option("--noise", flags.noise, "override noise kind: gaussian|pareto|student");
    cmd->add_option("--out", flags.out, "aggregate table output path");
    cmd->add_option("--rows-out", flags.rows_out, "optional per-replicate rows output path");
}

ExperimentSpec resolve_experiment(const ExperimentFlags& flags) {
    std::optional<std::string> config;
    if (!flags.config_path.empty()) config = flags.config_path;
    ExperimentSpec spec = load_experiment_spec(flags.preset, config);
    if (flags.n) spec.ns = {*flags.n};
    if (flags.p) spec.p = *flags.p;
    if (flags.replicates) spec.replicates = *flags.replicates;
    if (flags.seed) spec.base_seed = *flags.seed;
    if (flags.proportion) {
        spec.contamination.proportion = *flags.proportion;
        spec.contamination.count.reset();
    }
    if (flags.magnitude) spec.contamination.magnitude = *flags.magnitude;
    if (flags.strategy) {
        if (*flags.strategy == "random_shift") spec.contamination.strategy = AdversaryStrategy::random_shift;
        else if (*flags.strategy == "sign_aligned") spec.contamination.strategy = AdversaryStrategy::sign_aligned;
        else if (*flags.strategy == "response_flip") spec.contamination.strategy = AdversaryStrategy::response_flip;
        else throw ConfigError("--strategy: unknown value " + *flags.strategy);
    }
    if (flags.noise) {
        if (*flags.noise == "gaussian") spec.noise.kind = NoiseSpec::Kind::gaussian;
        else if (*flags.noise == "pareto") spec.noise.kind = NoiseSpec::Kind::pareto;
        else if (*flags.noise == "student") spec.noise.kind = NoiseSpec::Kind::student;
        else throw ConfigError("--noise: unknown value " + *flags.noise);
    }
    spec.validate();
    return spec;
}

int run_experiment(const ExperimentSpec& spec, const std::string& out,
                   const std::string& rows_out) {
    const std::string resolved = experiment_to_json_text(spec);
    const std::string out_path = resolve_out(out);
    switch (spec.kind) {
        case ExperimentKind::bias_curve: {
            const ExperimentReport report = bias_curve(spec);
            write_report_aggregates_csv(report, out_path);
            write_provenance(out_path, resolved);
            if (!rows_out.empty()) {
                const std::string rows_path = resolve_out(rows_out);
                write_report_rows_csv(report, rows_path);
                write_provenance(rows_path, resolved);
            }
            break;
        }
        case ExperimentKind::mse_distribution: {
            const ExperimentReport report = mse_distribution(spec);
            write_report_aggregates_csv(report, out_path);
            write_provenance(out_path, resolved);
            if (!rows_out.empty()) {
                const std::string rows_path = resolve_out(rows_out);
                write_report_rows_csv(report, rows_path);
                write_provenance(rows_path, resolved);
            }
            break;
        }
        case ExperimentKind::rate_curve: {
            const ExperimentReport report = rate_experiment(spec);
            write_report_aggregates_csv(report, out_path);
            write_provenance(out_path, resolved);
            if (!rows_out.empty()) {
                const std::string rows_path = resolve_out(rows_out);
                write_report_rows_csv(report, rows_path);
                write_provenance(rows_path, resolved);
            }
            break;
        }
        case ExperimentKind::convergence_trace: {
            const TraceReport report = convergence_trace_experiment(spec);
            write_trace_csv(report, out_path);
            write_provenance(out_path, resolved);
            break;
        }
        case ExperimentKind::normality: {
            const NormalityReport report = normality_experiment(
                spec.ns.front(), spec.p, spec.replicates, spec.base_seed);
            write_normality_csv(report, out_path);
            write_provenance(out_path, resolved);
            break;
        }
    }
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int run_cv_command(const CsvOptions& csv_opts, const std::string& loss, int folds,
                   const std::string& grid_text, std::uint64_t cv_seed, const std::string& out) {
    auto [data, record] = load_from_options(csv_opts);
    (void)record;
    const LossFamily family = loss_family_from_string(loss);
    CvSpec cv_spec;
    cv_spec.folds = folds;
    cv_spec.shuffle_seed = cv_seed;
    if (grid_text.empty()) {
        cv_spec.grid = default_grid(family, data.n(), data.p());
    } else {
        std::stringstream ss(grid_text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            cv_spec.grid.push_back(parse_positive(item, "--grid"));
        }
    }
    FitConfig cfg;
    cfg.loss.family = family;
    cfg.scale_mode = ScaleMode::mad_of_lad_residuals;
    const CvResult result = median_cv(data, family, cv_spec, cfg);

    const std::string out_path = resolve_out(out);
    write_cv_csv(result, out_path);
    json prov;
    prov["subcommand"] = "cv";
    prov["data"] = csv_opts.data_path;
    prov["target"] = csv_opts.target;
    prov["loss"] = loss;
    prov["folds"] = folds;
    prov["grid"] = cv_spec.grid;
    prov["shuffle_seed"] = cv_spec.shuffle_seed;
    write_provenance(out_path, prov.dump(2));
    std::cout << "chosen: " << format_double(result.chosen) << "\nwrote " << out_path << "\n";
    return 0;
}

int run_diagnose_csv(const CsvOptions& csv_opts, const LossOptions& loss_opts, int folds,
                     std::uint64_t seed, const std::string& out) {
    if (loss_family_from_string(loss_opts.loss) != LossFamily::welsch) {
        throw ConfigError("diagnose: basin diagnostics are defined for --loss welsch");
    }
    auto [data, record] = load_from_options(csv_opts);
    (void)record;
    ResolvedLoss loss = resolve_loss(loss_opts);
    FitConfig cfg;
    cfg.loss = loss.spec;
    cfg.scale_mode = ScaleMode::mad_of_lad_residuals;
    if (loss.wants_cv) {
        CvSpec cv_spec;
        cv_spec.folds = folds;
        cv_spec.grid = default_grid(LossFamily::welsch, data.n(), data.p());
        cv_spec.shuffle_seed = seed;
        const CvResult cv = median_cv(data, LossFamily::welsch, cv_spec, cfg);
        cfg.loss = apply_cv_candidate(cfg.loss, cv.chosen);
    }
    const FitResult fit = fit_two_stage(data, cfg);

    // Diagnostics live on the standardized objective: scale X and y by the
    // fitted sigma so residuals match r/sigma.
    Dataset scaled;
    scaled.X = data.X / fit.scale;
    scaled.y = data.y / fit.scale;
    const double min_eig = hessian_min_eigenvalue(scaled, fit.beta, cfg.loss.tau);
    const long o_plug =
        static_cast<long>(std::lround((1.0 - fit.basin_fraction) * static_cast<double>(data.n())));

    std::vector<std::vector<std::string>> rows;
    rows.push_back({"tau", format_double(cfg.loss.tau)});
    rows.push_back({"scale", format_double(fit.scale)});
    rows.push_back({"basin_fraction_lad_init", format_double(fit.basin_fraction_init)});
    rows.push_back({"basin_fraction", format_double(fit.basin_fraction)});
    rows.push_back({"hessian_min_eigenvalue", format_double(min_eig)});
    rows.push_back({"o_prime_plugin", std::to_string(o_plug)});
    if (o_plug >= 1 && 2 * o_plug <= data.n()) {
        rows.push_back(
            {"d_condition_min", format_double(d_condition(data.n(), data.p(), o_plug, 1.0))});
    } else {
        rows.push_back({"d_condition_min", "nan"});
    }
    for (const auto& row : rows) std::cout << row[0] << ": " << row[1] << "\n";
    if (!out.empty()) {
        const std::string out_path = resolve_out(out);
        write_csv(out_path, {"key", "value"}, rows);
        json prov;
        prov["subcommand"] = "diagnose";
        prov["data"] = csv_opts.data_path;
        prov["tau"] = cfg.loss.tau;
        prov["seed"] = seed;
        write_provenance(out_path, prov.dump(2));
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

int run_diagnose_sim(const ExperimentFlags& flags, long replicate, const std::string& out) {
    ExperimentSpec spec = resolve_experiment(flags);
    const EstimatorSpec* welsch_est = nullptr;
    for (const EstimatorSpec& est : spec.estimators) {
        if (est.loss.family == LossFamily::welsch) welsch_est = &est;
    }
    if (!welsch_est) throw ConfigError("diagnose: the experiment needs a welsch estimator");

    const long n = spec.ns.front();
    const long o = spec.contamination.resolve_count(n);
    const Eigen::VectorXd beta_star = spec.resolved_beta_star();
    const auto [data, truth] =
        generate_dataset(n, beta_star, spec.design, spec.noise, spec.contamination,
                         mix_seed(spec.base_seed, static_cast<std::uint64_t>(replicate)));

    FitConfig cfg = spec.fit_template;
    cfg.loss = welsch_est->loss;
    if (welsch_est->tau_policy != EstimatorSpec::TauPolicy::fixed) {
        TauMode mode = TauMode::prop2;
        if (welsch_est->tau_policy == EstimatorSpec::TauPolicy::debias) mode = TauMode::debias;
        if (welsch_est->tau_policy == EstimatorSpec::TauPolicy::asymptotic) mode = TauMode::asymptotic;
        cfg.loss.tau = theoretical_tau(n, o, welsch_est->delta, 2.0, 1.0, mode);
    }
    const FitResult fit = fit_two_stage(data, cfg);
    const double min_eig = hessian_min_eigenvalue(data, fit.beta, cfg.loss.tau);
    const long o_prime = augmented_outlier_count(data, truth, cfg.loss.tau);

    std::vector<std::vector<std::string>> rows;
    rows.push_back({"tau", format_double(cfg.loss.tau)});
    rows.push_back({"o", std::to_string(o)});
    rows.push_back({"o_prime", std::to_string(o_prime)});
    rows.push_back({"basin_fraction_lad_init", format_double(fit.basin_fraction_init)});
    rows.push_back({"basin_fraction", format_double(fit.basin_fraction)});
    rows.push_back({"hessian_min_eigenvalue", format_double(min_eig)});
    rows.push_back(
        {"error_l2", format_double((fit.beta - beta_star).norm())});
    rows.push_back({"ball_membership_c0.5",
                    ball_membership(fit.beta, beta_star, 0.5) ? "1" : "0"});
    if (o_prime >= 1 && 2 * o_prime <= n) {
        rows.push_back({"d_condition_min", format_double(d_condition(n, spec.p, o_prime, 1.0))});
    } else {
        rows.push_back({"d_condition_min", "nan"});
    }
    rows.push_back({"deviation_bound_up_to_constants",
                    format_double(deviation_bound(n, spec.p, std::max(o, 1L), welsch_est->delta,
                                                  2.0, 1.0))});
    for (const auto& row : rows) std::cout << row[0] << ": " << row[1] << "\n";
    if (!out.empty()) {
        const std::string out_path = resolve_out(out);
        write_csv(out_path, {"key", "value"}, rows);
        write_provenance(out_path, experiment_to_json_text(spec));
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"robust linear regression with the two-stage Welsch M-estimator"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "fit one estimator on a CSV");
    CsvOptions fit_csv;
    LossOptions fit_loss;
    add_csv_options(fit_cmd, fit_csv);
    add_loss_options(fit_cmd, fit_loss);
    double holdout = 0.0;
    std::uint64_t split_seed = 1;
    int folds = 5;
    std::uint64_t cv_seed = 0;
    std::string scale_mode = "mad";
    double algo_c = 1.0;
    int lad_max_iters = 100;
    std::string out_prefix = "fit";
    std::uint64_t fit_seed = 1;
    fit_cmd->add_option("--holdout", holdout, "held-out fraction for test scoring (default 0)");
    fit_cmd->add_option("--split-seed", split_seed, "seed for the holdout shuffle");
    fit_cmd->add_option("--folds", folds, "CV folds for 'auto' constants (default 5)");
    fit_cmd->add_option("--cv-seed", cv_seed, "CV shuffle seed (default: --seed)");
    fit_cmd->add_option("--scale-mode", scale_mode, "residual scale: mad|unit (default mad)");
    fit_cmd->add_option("--c", algo_c, "stage-1 median stopping threshold (default 1.0)");
    fit_cmd->add_option("--lad-max-iters", lad_max_iters, "stage-1 iteration cap");
    fit_cmd->add_option("--out-prefix", out_prefix, "output path prefix (default fit)");
    fit_cmd->add_option("--seed", fit_seed, "base seed (default 1)");

    // experiment subcommands
    auto* sim_cmd = app.add_subcommand("simulate", "run an experiment spec (JSON config)");
    ExperimentFlags sim_flags;
    add_experiment_flags(sim_cmd, sim_flags, "fig5-desk");

    auto* bias_cmd = app.add_subcommand("bias-curve", "bias vs outlier proportion");
    ExperimentFlags bias_flags;
    add_experiment_flags(bias_cmd, bias_flags, "fig1a-desk");

    auto* mse_cmd = app.add_subcommand("mse", "MSE distribution under contamination");
    ExperimentFlags mse_flags;
    add_experiment_flags(mse_cmd, mse_flags, "fig5-desk");

    auto* trace_cmd = app.add_subcommand("trace", "gradient-descent convergence traces");
    ExperimentFlags trace_flags;
    add_experiment_flags(trace_cmd, trace_flags, "fig4-desk");

    auto* rate_cmd = app.add_subcommand("rate", "error scaling across sample sizes");
    ExperimentFlags rate_flags;
    add_experiment_flags(rate_cmd, rate_flags, "rate-desk");

    auto* norm_cmd = app.add_subcommand("normality", "asymptotic normality study");
    ExperimentFlags norm_flags;
    add_experiment_flags(norm_cmd, norm_flags, "normality-desk");

    // cv
    auto* cv_cmd = app.add_subcommand("cv", "median cross-validation on a CSV");
    CsvOptions cv_csv;
    add_csv_options(cv_cmd, cv_csv);
    std::string cv_loss = "welsch";
    int cv_folds = 5;
    std::string cv_grid;
    std::uint64_t cv_shuffle_seed = 1;
    std::string cv_out = "cv.csv";
    cv_cmd->add_option("--loss", cv_loss, "loss family to tune");
    cv_cmd->add_option("--folds", cv_folds, "fold count (default 5)");
    cv_cmd->add_option("--grid", cv_grid, "comma-separated candidates (default: built-in grid)");
    cv_cmd->add_option("--cv-seed", cv_shuffle_seed, "shuffle seed (default 1)");
    cv_cmd->add_option("--out", cv_out, "CV table output path");

    // diagnose
    auto* diag_cmd = app.add_subcommand("diagnose",
                                        "basin fraction, Hessian eigenvalue, o', D-condition");
    CsvOptions diag_csv;
    LossOptions diag_loss;
    ExperimentFlags diag_flags;
    bool diag_sim = false;
    long diag_replicate = 0;
    std::string diag_out;
    std::uint64_t diag_seed = 1;
    int diag_folds = 5;
    diag_cmd->add_option("--data", diag_csv.data_path, "CSV input (omit with --sim)");
    diag_cmd->add_option("--target", diag_csv.target, "target column name (default y)");
    diag_cmd->add_option("--delimiter", diag_csv.delimiter, "cell delimiter (default ,)");
    diag_cmd->add_flag("--drop-non-numeric", diag_csv.drop_non_numeric,
                       "drop non-numeric feature columns");
    diag_cmd->add_flag("--no-standardize", diag_csv.no_standardize, "skip standardization");
    diag_cmd->add_flag("--no-intercept", diag_csv.no_intercept, "skip the intercept column");
    add_loss_options(diag_cmd, diag_loss);
    diag_cmd->add_flag("--sim", diag_sim, "diagnose one simulated dataset instead of a CSV");
    diag_cmd->add_option("--preset", diag_flags.preset, "simulation preset (with --sim)");
    diag_cmd->add_option("--config", diag_flags.config_path, "simulation config (with --sim)");
    diag_cmd->add_option("--seed", diag_seed, "base seed (default 1)");
    diag_cmd->add_option("--replicate", diag_replicate, "replicate index to diagnose (default 0)");
    diag_cmd->add_option("--folds", diag_folds, "CV folds for --tau auto (default 5)");
    diag_cmd->add_option("--out", diag_out, "optional key,value CSV output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        std::cout << kVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*fit_cmd) {
            return run_fit(fit_csv, fit_loss, holdout, split_seed, folds, cv_seed, scale_mode,
                           algo_c, lad_max_iters, out_prefix, fit_seed);
        }
        if (*cv_cmd) {
            return run_cv_command(cv_csv, cv_loss, cv_folds, cv_grid, cv_shuffle_seed, cv_out);
        }
        if (*diag_cmd) {
            if (diag_sim) {
                if (diag_flags.preset.empty()) diag_flags.preset = "fig5-desk";
                diag_flags.seed = diag_seed;
                return run_diagnose_sim(diag_flags, diag_replicate, diag_out);
            }
            if (diag_csv.data_path.empty()) {
                throw ConfigError("diagnose: provide --data or --sim");
            }
            return run_diagnose_csv(diag_csv, diag_loss, diag_folds, diag_seed, diag_out);
        }
        const struct {
            CLI::App* cmd;
            ExperimentFlags* flags;
            std::optional<ExperimentKind> forced_kind;
        } experiment_cmds[] = {
            {sim_cmd, &sim_flags, std::nullopt},
            {bias_cmd, &bias_flags, ExperimentKind::bias_curve},
            {mse_cmd, &mse_flags, ExperimentKind::mse_distribution},
            {trace_cmd, &trace_flags, ExperimentKind::convergence_trace},
            {rate_cmd, &rate_flags, ExperimentKind::rate_curve},
            {norm_cmd, &norm_flags, ExperimentKind::normality},
        };
        for (const auto& entry : experiment_cmds) {
            if (*entry.cmd) {
                ExperimentSpec spec = resolve_experiment(*entry.flags);
                if (entry.forced_kind && spec.kind != *entry.forced_kind) {
                    throw ConfigError(std::string("subcommand expects kind ") +
                                      to_string(*entry.forced_kind) + ", config gives " +
                                      to_string(spec.kind));
                }
                return run_experiment(spec, entry.flags->out, entry.flags->rows_out);
            }
        }
        std::cerr << "error: no subcommand\n" << app.help();
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace welsch
