#ifndef SCMC_MH_HPP
#define SCMC_MH_HPP

#include <cmath>
#include <functional>
#include <random>
#include <variant>
#include <vector>

#include "scmc/errors.hpp"
#include "scmc/stats.hpp"
#include "scmc/types.hpp"

namespace scmc {

/// Symmetric Gaussian random-walk step with per-component scale.
struct GaussianStep {
    double scale = 1.0;
};

/// Symmetric +/-k integer walk; out-of-support proposals are rejected by the
/// target, which keeps the proposal symmetric.
struct IntegerStep {
    int step = 1;
};

/// Chi-square proposal with df equal to the current component value.
/// Asymmetric: carries its forward/backward density correction.
struct ChiSquareStep {};

using ProposalStep = std::variant<GaussianStep, IntegerStep, ChiSquareStep>;

/// Metropolis-Hastings kernel invariant for a stage target. Proposal
/// descriptors cover every component of theta exactly once; a sweep proposes
/// all components jointly.
struct MutationKernel {
    std::function<double(const Vec&)> log_target;
    std::vector<ProposalStep> proposals;
    int sweeps = 1;
};

struct ChiSquareDraw {
    double proposed;
    double log_q_forward;
    double log_q_backward;
};

/// Draw from chi-square with df = current (continuous df via Gamma(df/2, 2))
/// and report both transition log densities for the Hastings correction.
inline ChiSquareDraw chi_square_proposal(double current, std::mt19937_64& rng) {
    if (current <= 0.0) throw numerical_error("chi-square proposal requires a positive current value");
    ChiSquareDraw d;
    d.proposed = sample_chi_square(current, rng);
    d.log_q_forward = log_chi_square_pdf(d.proposed, current);
    d.log_q_backward = log_chi_square_pdf(current, d.proposed);
    return d;
}

struct MoveResult {
    Vec state;
    int accepted = 0;       // accepted sweeps
    int sweeps = 0;
    double log_target;      // target at the returned state
};

/// `sweeps` full MH updates of theta. Acceptance probability
/// min{1, pi(theta') q(theta|theta') / (pi(theta) q(theta'|theta))}.
inline MoveResult mh_move(const Vec& theta, const MutationKernel& kernel,
                          std::mt19937_64& rng) {
    if (static_cast<Index>(kernel.proposals.size()) != theta.size())
        throw config_error("proposal descriptors must cover every component exactly once");

    MoveResult res;
    res.state = theta;
    res.sweeps = kernel.sweeps;
    res.log_target = kernel.log_target(theta);
    if (res.log_target == neg_inf)
        throw numerical_error("particle outside support at MH entry");

    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    for (int s = 0; s < kernel.sweeps; ++s) {
        Vec prop = res.state;
        double log_hastings = 0.0;  // log q(backward) - log q(forward)
        for (Index i = 0; i < prop.size(); ++i) {
            const ProposalStep& step = kernel.proposals[static_cast<std::size_t>(i)];
            if (const auto* g = std::get_if<GaussianStep>(&step)) {
                if (g->scale > 0.0) prop[i] += g->scale * normal(rng);
            } else if (const auto* iw = std::get_if<IntegerStep>(&step)) {
                const int sign = (rng() & 1u) ? 1 : -1;
                prop[i] += sign * iw->step;
            } else {
                const ChiSquareDraw d = chi_square_proposal(res.state[i], rng);
                prop[i] = d.proposed;
                log_hastings += d.log_q_backward - d.log_q_forward;
            }
        }
        const double lt_prop = kernel.log_target(prop);
        if (lt_prop == neg_inf) continue;  // rejected; state untouched
        const double log_alpha = lt_prop - res.log_target + log_hastings;
        if (log_alpha >= 0.0 || std::log(u01(rng)) < log_alpha) {
            res.state = std::move(prop);
            res.log_target = lt_prop;
            ++res.accepted;
        }
    }
    return res;
}

}  // namespace scmc

#endif  // SCMC_MH_HPP
