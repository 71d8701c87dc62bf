#include "welsch/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "welsch/diagnostics.hpp"
#include "welsch/errors.hpp"
#include "welsch/numeric.hpp"
#include "welsch/rng.hpp"

namespace welsch {

void CvSpec::validate() const {
    if (folds < 2) throw ConfigError("cv: folds must be >= 2");
    if (grid.empty()) throw ConfigError("cv: grid must be nonempty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0) || !std::isfinite(grid[i])) {
            throw ConfigError("cv: grid values must be positive and finite");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw ConfigError("cv: grid must be strictly increasing");
        }
    }
}

LossSpec apply_cv_candidate(LossSpec spec, double candidate) {
    if (!(candidate > 0)) throw ConfigError("cv: candidate must be > 0");
    switch (spec.family) {
        case LossFamily::welsch:
            spec.tau = candidate;
            return spec;
        case LossFamily::huber:
            spec.gamma = candidate;
            return spec;
        case LossFamily::tukey:
            spec.c = candidate;
            return spec;
        case LossFamily::hampel: {
            const double b_ratio = spec.b / spec.a;
            const double r_ratio = spec.r / spec.a;
            spec.a = candidate;
            spec.b = candidate * b_ratio;
            spec.r = candidate * r_ratio;
            return spec;
        }
        default:
            throw ConfigError(std::string("cv: loss family ") + to_string(spec.family) +
                              " has no scale-type hyperparameter");
    }
}

std::vector<std::vector<long>> cv_fold_indices(long n, int folds, std::uint64_t shuffle_seed) {
    if (folds < 2) throw ConfigError("cv: folds must be >= 2");
    if (n < folds) throw ConfigError("cv: need at least one row per fold");
    std::vector<long> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0L);
    Rng rng(shuffle_seed);
    rng.shuffle(order);
    std::vector<std::vector<long>> out(static_cast<std::size_t>(folds));
    for (int f = 0; f < folds; ++f) {
        const long lo = n * f / folds;
        const long hi = n * (f + 1) / folds;
        out[static_cast<std::size_t>(f)].assign(order.begin() + lo, order.begin() + hi);
    }
    return out;
}

CvResult median_cv(const Dataset& data, LossFamily family, const CvSpec& cv,
                   const FitConfig& fit_template) {
    data.validate();
    cv.validate();
    const long n = data.n();
    if (n < 2L * cv.folds) throw ConfigError("median_cv: need n >= 2 * folds");

    const int k = cv.folds;
    const std::vector<std::vector<long>> fold_rows = cv_fold_indices(n, k, cv.shuffle_seed);
    std::vector<Dataset> train(static_cast<std::size_t>(k));
    std::vector<Dataset> holdout(static_cast<std::size_t>(k));
    std::vector<bool> held(static_cast<std::size_t>(n));
    for (int f = 0; f < k; ++f) {
        held.assign(static_cast<std::size_t>(n), false);
        for (long row : fold_rows[static_cast<std::size_t>(f)]) {
            held[static_cast<std::size_t>(row)] = true;
        }
        const long va_size = static_cast<long>(fold_rows[static_cast<std::size_t>(f)].size());
        Dataset& va = holdout[static_cast<std::size_t>(f)];
        Dataset& tr = train[static_cast<std::size_t>(f)];
        va.X.resize(va_size, data.p());
        va.y.resize(va_size);
        tr.X.resize(n - va_size, data.p());
        tr.y.resize(n - va_size);
        long vi = 0, ti = 0;
        for (long row = 0; row < n; ++row) {
            if (held[static_cast<std::size_t>(row)]) {
                va.X.row(vi) = data.X.row(row);
                va.y[vi++] = data.y[row];
            } else {
                tr.X.row(ti) = data.X.row(row);
                tr.y[ti++] = data.y[row];
            }
        }
    }

    CvResult result;
    bool have_choice = false;
    double best_aggregate = 0.0;
    for (double candidate : cv.grid) {
        CvRow row;
        row.candidate = candidate;
        FitConfig cfg = fit_template;
        cfg.loss.family = family;
        cfg.loss = apply_cv_candidate(cfg.loss, candidate);
        std::vector<double> scores;
        for (int f = 0; f < k; ++f) {
            double score = std::numeric_limits<double>::quiet_NaN();
            try {
                const FitResult fit = fit_two_stage(train[static_cast<std::size_t>(f)], cfg);
                score = median_abs(residuals(holdout[static_cast<std::size_t>(f)], fit.beta));
                scores.push_back(score);
            } catch (const std::exception&) {
                // fold recorded as failed; candidate survives if any fold succeeds
            }
            row.fold_medians.push_back(score);
        }
        if (scores.empty()) {
            row.excluded = true;
            row.aggregate = std::numeric_limits<double>::quiet_NaN();
        } else {
            std::sort(scores.begin(), scores.end());
            row.aggregate = quantile_sorted(scores, 0.5);
            if (!have_choice || row.aggregate < best_aggregate) {
                have_choice = true;
                best_aggregate = row.aggregate;
                result.chosen = candidate;
            }
        }
        result.table.push_back(std::move(row));
    }

    if (!have_choice) throw std::runtime_error("median_cv: every candidate failed to fit");
    return result;
}

std::vector<double> default_grid(LossFamily family, long n, long p) {
    if (n < 1 || p < 1) throw ConfigError("default_grid: need n, p >= 1");
    const long o = static_cast<long>(std::floor(0.05 * static_cast<double>(n)));
    const double tau_anchor = theoretical_tau(n, o, 0.05, 2.0, 1.0, TauMode::prop2);
    double anchor = 0.0;
    switch (family) {
        case LossFamily::welsch:
            anchor = tau_anchor;
            break;
        case LossFamily::huber:
        case LossFamily::tukey:
        case LossFamily::hampel:
            anchor = 1.0 / std::sqrt(tau_anchor);
            break;
        default:
            throw ConfigError(std::string("default_grid: loss family ") + to_string(family) +
                              " has no scale-type hyperparameter");
    }
    const double lo = 0.01 * anchor;
    const double hi = 100.0 * anchor;
    const int count = 12;
    std::vector<double> grid(count);
    for (int i = 0; i < count; ++i) {
        grid[static_cast<std::size_t>(i)] =
            lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
    }
    return grid;
}

}  // namespace welsch
