#pragma once

#include <cstdint>
#include <vector>

#include "welsch/dataset.hpp"
#include "welsch/estimators.hpp"

namespace welsch {

struct CvSpec {
    int folds = 5;
    std::vector<double> grid;  // strictly increasing positive candidates
    std::uint64_t shuffle_seed = 0;

    void validate() const;
};

struct CvRow {
    double candidate = 0.0;
    std::vector<double> fold_medians;  // median |residual| per held-out fold (NaN = failed fit)
    double aggregate = 0.0;            // median over the successful folds
    bool excluded = false;             // every fold failed
};

struct CvResult {
    double chosen = 0.0;
    std::vector<CvRow> table;
};

/// Returns a copy of spec with the family's scale-type tuning constant set to
/// `candidate`: tau (welsch), gamma (huber), c (tukey), or the hampel corner a
/// with b and r scaled by the spec's corner ratios. Other families have no
/// such constant and raise ConfigError.
LossSpec apply_cv_candidate(LossSpec spec, double candidate);

/// Validation folds: a seeded shuffle of 0..n-1 split contiguously into
/// near-equal parts. Together the folds partition the index range.
std::vector<std::vector<long>> cv_fold_indices(long n, int folds, std::uint64_t shuffle_seed);

/// Median k-fold cross-validation. Folds come from a seeded shuffle followed
/// by a contiguous split; each candidate is fit on k-1 folds with the full
/// two-stage procedure and scored by the median absolute residual on the
/// held-out fold; fold scores aggregate by their median. The smallest
/// candidate wins ties. Candidates whose fits all fail are excluded; if every
/// candidate fails the selection itself fails.
CvResult median_cv(const Dataset& data, LossFamily family, const CvSpec& cv,
                   const FitConfig& fit_template);

/// 12 log-spaced candidates spanning [0.01, 100] x anchor, where the anchor is
/// theoretical_tau(n, o = 0.05n, delta = 0.05, ell = 2, C = 1, prop2) for the
/// welsch tau and 1/sqrt(anchor tau) for the huber/tukey/hampel cutoffs.
std::vector<double> default_grid(LossFamily family, long n, long p);

}  // namespace welsch
