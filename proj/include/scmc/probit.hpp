#ifndef SCMC_PROBIT_HPP
#define SCMC_PROBIT_HPP

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "scmc/errors.hpp"
#include "scmc/sequence.hpp"
#include "scmc/stats.hpp"
#include "scmc/types.hpp"

namespace scmc {

/// log Phi(tau * margin). Positive margins mean the constraint is satisfied;
/// tau = 0 leaves every factor at 1/2, tau -> inf turns the factor into an
/// indicator. Stable far into the violating tail (tau*margin ~ -1e5 stays
/// finite).
inline double probit_log_factor(double margin, double tau) {
    if (tau < 0.0) throw config_error("constraint parameter tau must be non-negative");
    return log_norm_cdf(tau * margin);
}

/// Strictly increasing constraint schedule starting at tau_0 = 0.
struct TauSchedule {
    std::vector<double> values;

    static TauSchedule geometric(double tau_min, double tau_max, int steps) {
        if (steps < 1 || tau_min <= 0.0 || tau_max < tau_min)
            throw config_error("invalid geometric tau schedule");
        TauSchedule s;
        s.values.push_back(0.0);
        for (int k = 0; k < steps; ++k) {
            const double f = steps == 1 ? 1.0 : static_cast<double>(k) / (steps - 1);
            s.values.push_back(tau_min * std::pow(tau_max / tau_min, f));
        }
        return s;
    }

    static TauSchedule linear(double tau_max, int steps) {
        if (steps < 1 || tau_max <= 0.0) throw config_error("invalid linear tau schedule");
        TauSchedule s;
        for (int k = 0; k <= steps; ++k)
            s.values.push_back(tau_max * static_cast<double>(k) / steps);
        return s;
    }

    static TauSchedule from_values(std::vector<double> v) {
        if (v.empty() || v.front() != 0.0) throw config_error("tau schedule must start at 0");
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i] <= v[i - 1]) throw config_error("tau schedule must be strictly increasing");
        TauSchedule s;
        s.values = std::move(v);
        return s;
    }
};

/// Soft constraint as a product of probit factors over signed margins.
struct ProbitConstraint {
    std::function<Vec(const Vec&)> margins;

    double log_factor(const Vec& theta, double tau) const {
        const Vec m = margins(theta);
        double v = 0.0;
        for (Index i = 0; i < m.size(); ++i) v += probit_log_factor(m[i], tau);
        return v;
    }
};

/// Bridge from an unconstrained base density to its constrained limit:
/// stage-t log kernel = base(theta) + sum_i log Phi(tau_t * margin_i(theta)).
inline DensitySequence build_constraint_sequence(
    std::function<double(const Vec&)> base_log_density,
    std::function<Vec(std::mt19937_64&)> sample_base,
    ProbitConstraint constraint, const TauSchedule& schedule) {
    DensitySequence seq;
    seq.param_names = {"tau"};
    for (double tau : schedule.values) seq.stage_params.push_back(Vec::Constant(1, tau));
    seq.sample_initial = std::move(sample_base);
    const std::vector<double> taus = schedule.values;
    seq.log_kernel = [base = std::move(base_log_density), c = std::move(constraint),
                      taus](const Vec& theta, int t) {
        return base(theta) + c.log_factor(theta, taus[static_cast<std::size_t>(t)]);
    };
    return seq;
}

/// Bivariate standard Gaussian softly constrained to the manifold
/// x^2 - y^2 = 1:  log N2((x,y); 0, I) + log 2 + log Phi(-tau |x^2 - (y^2+1)|).
/// At tau = 0 the constraint factor is exactly 1.
inline double manifold_log_target(double x, double y, double tau) {
    const double base = -0.5 * (x * x + y * y) - log_2pi;
    const double defect = std::abs(x * x - (y * y + 1.0));
    return base + std::log(2.0) + probit_log_factor(-defect, tau);
}

/// The same target expressed in hyperbolic coordinates (s, u, sigma):
///   y = sinh(s),  u = x^2 - y^2 - 1,  sigma = sign(x) in {-1, +1},
/// so x = sigma * sqrt(cosh(s)^2 + u). The density picks up the change-of-
/// variables factor |d(x,y)/d(s,u)| = cosh(s) / (2|x|). The constraint acts
/// on the single coordinate u, so axis-aligned random walks with ensemble-
/// adapted scales keep moving even when the band |u| < 1/tau is very thin:
/// the ensemble's u-spread (and hence the proposal scale) contracts with it,
/// while moves in s travel along the constraint set at full stride.
inline double manifold_log_target_hyperbolic(double s, double u, double sigma,
                                             double tau) {
    if (sigma != 1.0 && sigma != -1.0) return neg_inf;
    const double ch = std::cosh(s);
    const double x2 = ch * ch + u;
    if (x2 <= 0.0) return neg_inf;
    const double y = std::sinh(s);
    const double base = -0.5 * (x2 + y * y) - log_2pi;
    // + log 2 from the constraint normalization, + log cosh(s) - log(2|x|)
    // from the Jacobian; the two log-2 terms cancel.
    return base + probit_log_factor(-std::abs(u), tau) + std::log(ch) -
           0.5 * std::log(x2);
}

/// Map a hyperbolic-coordinate point back to the (x, y) plane.
inline Vec manifold_from_hyperbolic(const Vec& v) {
    const double ch = std::cosh(v[0]);
    const double x2 = std::max(ch * ch + v[1], 0.0);
    Vec xy(2);
    xy[0] = v[2] * std::sqrt(x2);
    xy[1] = std::sinh(v[0]);
    return xy;
}

inline DensitySequence manifold_sequence_hyperbolic(const TauSchedule& schedule) {
    DensitySequence seq;
    seq.param_names = {"tau"};
    for (double tau : schedule.values) seq.stage_params.push_back(Vec::Constant(1, tau));
    seq.sample_initial = [](std::mt19937_64& rng) {
        std::normal_distribution<double> normal(0.0, 1.0);
        const double x = normal(rng);
        const double y = normal(rng);
        Vec v(3);
        v[0] = std::asinh(y);
        v[1] = x * x - y * y - 1.0;
        v[2] = x < 0.0 ? -1.0 : 1.0;
        return v;
    };
    const std::vector<double> taus = schedule.values;
    seq.log_kernel = [taus](const Vec& v, int t) {
        return manifold_log_target_hyperbolic(v[0], v[1], v[2],
                                              taus[static_cast<std::size_t>(t)]);
    };
    return seq;
}

inline DensitySequence manifold_sequence(const TauSchedule& schedule) {
    DensitySequence seq;
    seq.param_names = {"tau"};
    for (double tau : schedule.values) seq.stage_params.push_back(Vec::Constant(1, tau));
    seq.sample_initial = [](std::mt19937_64& rng) {
        std::normal_distribution<double> normal(0.0, 1.0);
        Vec theta(2);
        theta[0] = normal(rng);
        theta[1] = normal(rng);
        return theta;
    };
    const std::vector<double> taus = schedule.values;
    seq.log_kernel = [taus](const Vec& theta, int t) {
        return manifold_log_target(theta[0], theta[1], taus[static_cast<std::size_t>(t)]);
    };
    return seq;
}

}  // namespace scmc

#endif  // SCMC_PROBIT_HPP
