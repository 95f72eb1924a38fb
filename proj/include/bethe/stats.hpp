#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "bethe/errors.hpp"

namespace bethe {

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|. Inputs must be sorted.
inline double ks_sorted(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw UsageError("ks: empty sample");
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double best = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        best = std::max(best, std::abs(i / na - j / nb));
    }
    return best;
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return ks_sorted(a, b);
}

/// Asymptotic two-sample KS critical value at level alpha:
/// sqrt(-log(alpha / 2) / 2) * sqrt((n + m) / (n m)).
inline double ks_critical(std::size_t n, std::size_t m, double alpha = 0.01) {
    if (n == 0 || m == 0) throw UsageError("ks_critical: empty sample");
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("ks_critical: alpha must be in (0, 1)");
    const double dn = static_cast<double>(n), dm = static_cast<double>(m);
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) * std::sqrt((dn + dm) / (dn * dm));
}

/// One-sample KS statistic against a continuous CDF.
template <typename Cdf>
double ks_one_sample(std::vector<double> xs, Cdf&& cdf) {
    if (xs.empty()) throw UsageError("ks: empty sample");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double best = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        best = std::max({best, std::abs(f - i / n), std::abs((i + 1) / n - f)});
    }
    return best;
}

/// sup_k |a_(k) - b_(k)| for equally sized sorted samples: the infinity-Wasserstein
/// distance between the two empirical laws on the line.
inline double winf_sorted(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw UsageError("winf: sample sizes differ");
    double best = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) best = std::max(best, std::abs(a[i] - b[i]));
    return best;
}

struct Estimate {
    double value = 0.0;
    double error = 0.0;  // standard error
};

/// Mean with delete-one-block jackknife standard error.
inline Estimate jackknife_mean(std::span<const double> xs, std::size_t blocks = 100) {
    if (xs.empty()) throw UsageError("jackknife: empty sample");
    const std::size_t n = xs.size();
    blocks = std::clamp<std::size_t>(blocks, 1, n);
    double total = 0.0;
    for (double x : xs) total += x;
    const double mean = total / static_cast<double>(n);
    if (blocks < 2) return {mean, 0.0};
    std::vector<double> leave_out(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t lo = b * n / blocks, hi = (b + 1) * n / blocks;
        double part = 0.0;
        for (std::size_t i = lo; i < hi; ++i) part += xs[i];
        leave_out[b] = (total - part) / static_cast<double>(n - (hi - lo));
    }
    double var = 0.0;
    for (double v : leave_out) var += (v - mean) * (v - mean);
    const double m = static_cast<double>(blocks);
    return {mean, std::sqrt(var * (m - 1.0) / m)};
}

}  // namespace bethe
