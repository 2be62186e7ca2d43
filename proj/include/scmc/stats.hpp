#ifndef SCMC_STATS_HPP
#define SCMC_STATS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "scmc/errors.hpp"
#include "scmc/types.hpp"

namespace scmc {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double log_2pi = 1.8378770664093454836;

/// log of the standard normal CDF, stable for large negative arguments.
/// erfc covers the range down to about -37; below that an asymptotic
/// expansion keeps the value finite rather than collapsing to -inf.
inline double log_norm_cdf(double x) {
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    if (x > -20.0) {
        return std::log(0.5 * std::erfc(-x * inv_sqrt2));
    }
    // logPhi(x) ~ -x^2/2 - log(-x) - log(2*pi)/2 + log(1 - 1/x^2 + 3/x^4)
    const double x2 = x * x;
    return -0.5 * x2 - std::log(-x) - 0.5 * log_2pi +
           std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

inline double log_normal_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (log_2pi + std::log(var) + d * d / var);
}

/// Gamma(shape, scale) log density.
inline double log_gamma_pdf(double x, double shape, double scale) {
    if (x <= 0.0) return neg_inf;
    return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) -
           shape * std::log(scale);
}

/// InvGamma(shape, scale) log density: x^{-shape-1} exp(-scale/x).
inline double log_inv_gamma_pdf(double x, double shape, double scale) {
    if (x <= 0.0) return neg_inf;
    return shape * std::log(scale) - std::lgamma(shape) -
           (shape + 1.0) * std::log(x) - scale / x;
}

inline double log_binomial_pmf(double k, double n, double p) {
    if (k < 0 || k > n) return neg_inf;
    const double lc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                      std::lgamma(n - k + 1.0);
    double term = 0.0;
    if (k > 0) term += k * std::log(p);
    if (n - k > 0) term += (n - k) * std::log1p(-p);
    return lc + term;
}

inline double log_poisson_pmf(double k, double mean) {
    if (k < 0) return neg_inf;
    if (mean <= 0.0) return k == 0 ? 0.0 : neg_inf;
    return k * std::log(mean) - mean - std::lgamma(k + 1.0);
}

inline double sample_gamma(double shape, double scale, std::mt19937_64& rng) {
    std::gamma_distribution<double> d(shape, scale);
    return d(rng);
}

/// InvGamma(shape, scale) draw via the reciprocal of a Gamma(shape, 1/scale)^-1.
inline double sample_inv_gamma(double shape, double scale, std::mt19937_64& rng) {
    return scale / std::gamma_distribution<double>(shape, 1.0)(rng);
}

/// Chi-square with (possibly non-integer) degrees of freedom df.
inline double sample_chi_square(double df, std::mt19937_64& rng) {
    return std::gamma_distribution<double>(0.5 * df, 2.0)(rng);
}

inline double log_chi_square_pdf(double x, double df) {
    return log_gamma_pdf(x, 0.5 * df, 2.0);
}

/// Quantile of a weighted sample (weights need not be normalized).
/// Matches the usual inverse-CDF convention on the sorted values.
inline double weighted_quantile(const Vec& values, const Vec& weights, double q) {
    const Index n = values.size();
    std::vector<Index> idx(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::sort(idx.begin(), idx.end(),
              [&](Index a, Index b) { return values[a] < values[b]; });
    const double total = weights.sum();
    double cum = 0.0;
    for (Index k = 0; k < n; ++k) {
        cum += weights[idx[static_cast<std::size_t>(k)]];
        if (cum >= q * total) return values[idx[static_cast<std::size_t>(k)]];
    }
    return values[idx[static_cast<std::size_t>(n - 1)]];
}

/// Unweighted quantile with linear interpolation between order statistics.
inline double quantile(Vec values, double q) {
    std::sort(values.data(), values.data() + values.size());
    const Index n = values.size();
    if (n == 1) return values[0];
    const double h = q * static_cast<double>(n - 1);
    const Index lo = static_cast<Index>(std::floor(h));
    const Index hi = std::min(lo + 1, n - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace scmc

#endif  // SCMC_STATS_HPP
