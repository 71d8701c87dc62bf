#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "welsch/dataset.hpp"
#include "welsch/model_selection.hpp"
#include "welsch/simulation.hpp"

namespace welsch {

/// CSV ingestion contract: header row required, one target column, every
/// retained feature cell a finite number. Non-numeric feature columns are
/// rejected unless drop_non_numeric is set.
struct TabularFile {
    std::string path;
    char delimiter = ',';
    std::string target = "y";
    bool drop_non_numeric = false;
};

/// Column bookkeeping for mapping standardized-fit coefficients back to the
/// original units.
struct TransformRecord {
    std::vector<std::string> feature_names;  // transformed design order, intercept first if added
    std::vector<std::string> dropped_columns;
    std::string target;
    bool standardized = false;
    bool intercept = false;
    Eigen::VectorXd means;             // per feature column (excluding intercept)
    Eigen::VectorXd sds;               // sample sd; constant columns keep sd = 0
    std::vector<bool> constant_column;

    /// Coefficients in original feature units plus the additive offset induced
    /// by de-standardization. With an intercept column the offset is folded
    /// into the intercept coefficient and the returned offset is zero.
    std::pair<Eigen::VectorXd, double> to_original_units(const Eigen::VectorXd& beta) const;
};

std::pair<Dataset, TransformRecord> load_csv(const TabularFile& file, bool standardize,
                                             bool add_intercept);

/// 17-significant-digit formatting; round-trips exactly through strtod.
std::string format_double(double value);

/// Generic CSV writer used by every report kind.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Per-replicate rows: replicate,estimator,n,outlier_proportion,err_l2,err_sq,
/// stage1_iters,stage2_iters,basin_fraction_init,basin_fraction,status,beta_0..beta_{p-1}.
void write_report_rows_csv(const ExperimentReport& report, const std::string& path);

/// Aggregates: n,outlier_proportion,estimator,bias,mean_err,median_err,
/// median_sq_err,q25_sq_err,q75_sq_err,replicates.
void write_report_aggregates_csv(const ExperimentReport& report, const std::string& path);

/// Trace rows: replicate,estimator,iteration,error.
void write_trace_csv(const TraceReport& report, const std::string& path);

/// Normality deviations: replicate,z_0..z_{p-1}. The summary goes to
/// `<path minus extension>_summary.csv` with rows statistic,i,j,value.
void write_normality_csv(const NormalityReport& report, const std::string& path);

/// CV table: candidate,fold_0..fold_{k-1},aggregate,excluded.
void write_cv_csv(const CvResult& result, const std::string& path);

}  // namespace welsch
