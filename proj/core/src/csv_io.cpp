#include "welsch/csv_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "welsch/errors.hpp"
#include "welsch/numeric.hpp"

namespace welsch {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, delim)) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == delim) cells.push_back("");
    return cells;
}

bool parse_number(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    char* end = nullptr;
    out = std::strtod(cell.c_str(), &end);
    return end == cell.c_str() + cell.size();
}

std::string summary_path_for(const std::string& path) {
    const auto dot = path.rfind('.');
    const auto slash = path.rfind('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
        return path + "_summary.csv";
    }
    return path.substr(0, dot) + "_summary" + path.substr(dot);
}

}  // namespace

std::pair<Dataset, TransformRecord> load_csv(const TabularFile& file, bool standardize,
                                             bool add_intercept) {
    std::ifstream in(file.path);
    if (!in) throw IoError("load_csv: cannot open " + file.path);

    std::string line;
    if (!std::getline(in, line)) throw IoError("load_csv: empty file " + file.path);
    const std::vector<std::string> header = split_line(line, file.delimiter);
    if (header.empty()) throw IoError("load_csv: empty header in " + file.path);

    std::vector<std::vector<std::string>> raw;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split_line(line, file.delimiter);
        if (cells.size() != header.size()) {
            throw IoError("load_csv: row " + std::to_string(raw.size() + 2) + " has " +
                          std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(header.size()));
        }
        raw.push_back(std::move(cells));
    }
    if (raw.empty()) throw IoError("load_csv: no data rows in " + file.path);

    long target_col = -1;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == file.target) target_col = static_cast<long>(j);
    }
    if (target_col < 0) {
        throw ConfigError("load_csv: target column '" + file.target + "' not found in " +
                          file.path);
    }

    const long n = static_cast<long>(raw.size());
    TransformRecord record;
    record.target = file.target;

    // Classify feature columns; the target must be numeric everywhere.
    std::vector<long> feature_cols;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (static_cast<long>(j) == target_col) continue;
        bool numeric = true;
        double parsed = 0.0;
        for (long i = 0; i < n && numeric; ++i) {
            numeric = parse_number(raw[static_cast<std::size_t>(i)][j], parsed) &&
                      std::isfinite(parsed);
        }
        if (numeric) {
            feature_cols.push_back(static_cast<long>(j));
        } else if (file.drop_non_numeric) {
            record.dropped_columns.push_back(header[j]);
        } else {
            for (long i = 0; i < n; ++i) {
                if (!parse_number(raw[static_cast<std::size_t>(i)][j], parsed) ||
                    !std::isfinite(parsed)) {
                    throw IoError("load_csv: non-numeric cell at row " + std::to_string(i + 2) +
                                  ", column '" + header[j] +
                                  "' (use drop_non_numeric to drop such columns)");
                }
            }
        }
    }
    if (feature_cols.empty()) throw ConfigError("load_csv: no numeric feature columns remain");

    const long p = static_cast<long>(feature_cols.size());
    Dataset data;
    data.X.resize(n, p);
    data.y.resize(n);
    for (long i = 0; i < n; ++i) {
        double value = 0.0;
        const std::string& cell = raw[static_cast<std::size_t>(i)][static_cast<std::size_t>(target_col)];
        if (!parse_number(cell, value) || !std::isfinite(value)) {
            throw IoError("load_csv: non-numeric target cell at row " + std::to_string(i + 2));
        }
        data.y[i] = value;
        for (long j = 0; j < p; ++j) {
            parse_number(raw[static_cast<std::size_t>(i)]
                            [static_cast<std::size_t>(feature_cols[static_cast<std::size_t>(j)])],
                         value);
            data.X(i, j) = value;
        }
    }

    record.standardized = standardize;
    record.means = Eigen::VectorXd::Zero(p);
    record.sds = Eigen::VectorXd::Zero(p);
    record.constant_column.assign(static_cast<std::size_t>(p), false);
    for (long j = 0; j < p; ++j) {
        record.feature_names.push_back(header[static_cast<std::size_t>(
            feature_cols[static_cast<std::size_t>(j)])]);
        record.means[j] = data.X.col(j).mean();
        record.sds[j] = sample_sd(data.X.col(j));
        if (record.sds[j] == 0.0) record.constant_column[static_cast<std::size_t>(j)] = true;
    }
    if (standardize) {
        for (long j = 0; j < p; ++j) {
            if (record.constant_column[static_cast<std::size_t>(j)]) continue;
            data.X.col(j) = (data.X.col(j).array() - record.means[j]) / record.sds[j];
        }
    }

    record.intercept = add_intercept;
    if (add_intercept) {
        Eigen::MatrixXd with_ones(n, p + 1);
        with_ones.col(0).setOnes();
        with_ones.rightCols(p) = data.X;
        data.X = std::move(with_ones);
        record.feature_names.insert(record.feature_names.begin(), "(intercept)");
    }

    data.validate();
    return {std::move(data), std::move(record)};
}

std::pair<Eigen::VectorXd, double> TransformRecord::to_original_units(
    const Eigen::VectorXd& beta) const {
    const long offset_col = intercept ? 1 : 0;
    const long p = static_cast<long>(means.size());
    if (beta.size() != p + offset_col) {
        throw ConfigError("to_original_units: coefficient length mismatch");
    }
    Eigen::VectorXd out = beta;
    double shift = 0.0;
    if (standardized) {
        for (long j = 0; j < p; ++j) {
            if (constant_column[static_cast<std::size_t>(j)]) continue;
            out[j + offset_col] = beta[j + offset_col] / sds[j];
            shift -= beta[j + offset_col] * means[j] / sds[j];
        }
    }
    if (intercept) {
        out[0] += shift;
        shift = 0.0;
    }
    return {std::move(out), shift};
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("write_csv: cannot open " + path + " for writing");
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) out << ',';
        out << header[j];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out << ',';
            out << row[j];
        }
        out << '\n';
    }
    if (!out) throw IoError("write_csv: failed while writing " + path);
}

void write_report_rows_csv(const ExperimentReport& report, const std::string& path) {
    const long p = report.rows.empty() ? 0 : report.rows.front().beta.size();
    std::vector<std::string> header = {"replicate",     "estimator",
                                       "n",             "outlier_proportion",
                                       "err_l2",        "err_sq",
                                       "stage1_iters",  "stage2_iters",
                                       "basin_fraction_init", "basin_fraction",
                                       "status"};
    for (long j = 0; j < p; ++j) header.push_back("beta_" + std::to_string(j));
    std::vector<std::vector<std::string>> rows;
    rows.reserve(report.rows.size());
    for (const ReplicateRow& r : report.rows) {
        std::vector<std::string> row = {std::to_string(r.replicate),
                                        r.estimator,
                                        std::to_string(r.n),
                                        format_double(r.proportion),
                                        format_double(r.err_l2),
                                        format_double(r.err_sq),
                                        std::to_string(r.stage1_iters),
                                        std::to_string(r.stage2_iters),
                                        format_double(r.basin_fraction_init),
                                        format_double(r.basin_fraction),
                                        r.status};
        for (long j = 0; j < r.beta.size(); ++j) row.push_back(format_double(r.beta[j]));
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

void write_report_aggregates_csv(const ExperimentReport& report, const std::string& path) {
    const std::vector<std::string> header = {"n",          "outlier_proportion", "estimator",
                                             "bias",       "mean_err",           "median_err",
                                             "median_sq_err", "q25_sq_err",      "q75_sq_err",
                                             "replicates"};
    std::vector<std::vector<std::string>> rows;
    for (const AggregateRow& a : report.aggregates) {
        rows.push_back({std::to_string(a.n), format_double(a.proportion), a.estimator,
                        format_double(a.bias), format_double(a.mean_err),
                        format_double(a.median_err), format_double(a.median_sq_err),
                        format_double(a.q25_sq_err), format_double(a.q75_sq_err),
                        std::to_string(a.replicates)});
    }
    write_csv(path, header, rows);
}

void write_trace_csv(const TraceReport& report, const std::string& path) {
    const std::vector<std::string> header = {"replicate", "estimator", "iteration", "error"};
    std::vector<std::vector<std::string>> rows;
    rows.reserve(report.rows.size());
    for (const TraceRow& r : report.rows) {
        rows.push_back({std::to_string(r.replicate), r.estimator, std::to_string(r.iteration),
                        format_double(r.error)});
    }
    write_csv(path, header, rows);
}

void write_normality_csv(const NormalityReport& report, const std::string& path) {
    std::vector<std::string> header = {"replicate"};
    for (long j = 0; j < report.p; ++j) header.push_back("z_" + std::to_string(j));
    std::vector<std::vector<std::string>> rows;
    for (long r = 0; r < report.scaled_deviations.rows(); ++r) {
        std::vector<std::string> row = {std::to_string(r)};
        for (long j = 0; j < report.p; ++j) {
            row.push_back(format_double(report.scaled_deviations(r, j)));
        }
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);

    const std::vector<std::string> sum_header = {"statistic", "i", "j", "value"};
    std::vector<std::vector<std::string>> sum_rows;
    for (long i = 0; i < report.p; ++i) {
        sum_rows.push_back({"mean", std::to_string(i), "", format_double(report.coord_mean[i])});
    }
    for (long i = 0; i < report.p; ++i) {
        sum_rows.push_back(
            {"variance", std::to_string(i), "", format_double(report.coord_variance[i])});
    }
    for (long i = 0; i < report.p; ++i) {
        for (long j = i + 1; j < report.p; ++j) {
            sum_rows.push_back({"covariance", std::to_string(i), std::to_string(j),
                                format_double(report.covariance(i, j))});
        }
    }
    for (long i = 0; i < report.p; ++i) {
        sum_rows.push_back({"ks", std::to_string(i), "", format_double(report.ks_statistic[i])});
    }
    write_csv(summary_path_for(path), sum_header, sum_rows);
}

void write_cv_csv(const CvResult& result, const std::string& path) {
    const std::size_t folds = result.table.empty() ? 0 : result.table.front().fold_medians.size();
    std::vector<std::string> header = {"candidate"};
    for (std::size_t f = 0; f < folds; ++f) header.push_back("fold_" + std::to_string(f));
    header.push_back("aggregate");
    header.push_back("excluded");
    std::vector<std::vector<std::string>> rows;
    for (const CvRow& r : result.table) {
        std::vector<std::string> row = {format_double(r.candidate)};
        for (double m : r.fold_medians) row.push_back(format_double(m));
        row.push_back(format_double(r.aggregate));
        row.push_back(r.excluded ? "1" : "0");
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

}  // namespace welsch
