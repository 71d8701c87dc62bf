#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace welsch {

inline double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

inline double median(const Eigen::VectorXd& v) {
    std::vector<double> tmp(v.data(), v.data() + v.size());
    return median_inplace(tmp);
}

inline double median_abs(const Eigen::VectorXd& v) {
    std::vector<double> tmp(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) tmp[static_cast<std::size_t>(i)] = std::abs(v[i]);
    return median_inplace(tmp);
}

/// median(|v_i - median(v)|)
inline double mad(const Eigen::VectorXd& v) {
    const double m = median(v);
    std::vector<double> dev(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        dev[static_cast<std::size_t>(i)] = std::abs(v[i] - m);
    }
    return median_inplace(dev);
}

inline double sample_sd(const Eigen::VectorXd& v) {
    if (v.size() < 2) return 0.0;
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Type-7 (linear interpolation) quantile of an ascending-sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double h = static_cast<double>(sorted.size() - 1) * q;
    const std::size_t lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace welsch
