#ifndef SCMC_PARTICLES_HPP
#define SCMC_PARTICLES_HPP

#include <cmath>
#include <random>
#include <vector>

#include "scmc/errors.hpp"
#include "scmc/stats.hpp"
#include "scmc/types.hpp"

namespace scmc {

/// Weighted particle ensemble. Rows of `particles` are parameter vectors;
/// weights live in the log domain throughout (probit factors underflow
/// linear weights long before the final stages). `aux` is an optional
/// per-particle payload, opaque here; it travels with its particle through
/// resampling (ABC replicate summaries use it).
struct ParticleEnsemble {
    Mat particles;     // N x d
    Vec log_weights;   // N
    std::vector<Mat> aux;  // empty, or one payload per particle

    Index size() const { return particles.rows(); }
    Index dim() const { return particles.cols(); }
};

enum class ResampleMethod { multinomial, systematic };

inline double log_sum_exp(const Vec& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;  // all -inf (or a NaN surfaced as max)
    double s = 0.0;
    for (Index i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
    return m + std::log(s);
}

/// Normalize log weights so exp sums to one. Invariant to adding a constant.
inline Vec normalize_log_weights(const Vec& log_w) {
    for (Index i = 0; i < log_w.size(); ++i) {
        if (std::isnan(log_w[i])) throw degenerate_error("degenerate ensemble: NaN weight");
    }
    const double lse = log_sum_exp(log_w);
    if (!std::isfinite(lse)) throw degenerate_error("all weights zero");
    return log_w.array() - lse;
}

/// ESS = (sum_j W_j^2)^{-1} on normalized weights; in [1, N].
inline double ess(const Vec& normalized_log_w) {
    double s = 0.0;
    for (Index i = 0; i < normalized_log_w.size(); ++i) {
        const double lw = normalized_log_w[i];
        if (std::isnan(lw)) throw degenerate_error("degenerate ensemble: NaN weight");
        s += std::exp(2.0 * lw);
    }
    if (s <= 0.0) throw degenerate_error("degenerate ensemble: all weights zero");
    return 1.0 / s;
}

/// Ancestor indices for multinomial or systematic resampling from normalized
/// linear weights. Expected copy count of particle j is N*W_j for both.
inline std::vector<Index> resample_indices(const Vec& weights, ResampleMethod method,
                                           std::mt19937_64& rng) {
    const Index n = weights.size();
    std::vector<Index> out(static_cast<std::size_t>(n));
    if (method == ResampleMethod::multinomial) {
        std::discrete_distribution<Index> d(weights.data(), weights.data() + n);
        for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = d(rng);
        return out;
    }
    // systematic: one uniform offset, N equally spaced positions
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double u = u01(rng) / static_cast<double>(n);
    double cum = weights[0];
    Index j = 0;
    for (Index i = 0; i < n; ++i) {
        const double pos = u + static_cast<double>(i) / static_cast<double>(n);
        while (pos > cum && j + 1 < n) cum += weights[++j];
        out[static_cast<std::size_t>(i)] = j;
    }
    return out;
}

/// Resample to uniform weights, copying particles (and aux) by ancestor.
inline ParticleEnsemble resample(const ParticleEnsemble& in, ResampleMethod method,
                                 std::mt19937_64& rng) {
    const Index n = in.size();
    const Vec norm = normalize_log_weights(in.log_weights);
    Vec w(n);
    for (Index i = 0; i < n; ++i) w[i] = std::exp(norm[i]);
    const std::vector<Index> anc = resample_indices(w, method, rng);

    ParticleEnsemble out;
    out.particles.resize(n, in.dim());
    out.log_weights = Vec::Constant(n, -std::log(static_cast<double>(n)));
    if (!in.aux.empty()) out.aux.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        out.particles.row(i) = in.particles.row(anc[static_cast<std::size_t>(i)]);
        if (!in.aux.empty())
            out.aux[static_cast<std::size_t>(i)] =
                in.aux[static_cast<std::size_t>(anc[static_cast<std::size_t>(i)])];
    }
    return out;
}

}  // namespace scmc

#endif  // SCMC_PARTICLES_HPP
