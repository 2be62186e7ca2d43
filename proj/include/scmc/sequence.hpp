#ifndef SCMC_SEQUENCE_HPP
#define SCMC_SEQUENCE_HPP

#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "scmc/errors.hpp"
#include "scmc/types.hpp"

namespace scmc {

/// An indexed family of unnormalized log kernels log eta_t(theta),
/// t = 0..T, together with an exact sampler for the t=0 distribution.
/// Each stage carries its constraint parameter values (tau_t, (b_t, xi_t),
/// or a data count) for diagnostics and traces.
struct DensitySequence {
    std::vector<Vec> stage_params;  // T+1 entries
    std::vector<std::string> param_names;
    std::function<double(const Vec&, int)> log_kernel;
    std::function<Vec(std::mt19937_64&)> sample_initial;

    int num_stages() const { return static_cast<int>(stage_params.size()) - 1; }
};

/// Power posterior bridge: log eta_t = log prior + tau_t * loglik,
/// 0 = tau_0 < ... < tau_T = 1.
inline DensitySequence power_posterior_sequence(
    std::function<double(const Vec&)> log_prior,
    std::function<double(const Vec&)> log_lik,
    std::function<Vec(std::mt19937_64&)> sample_prior,
    const std::vector<double>& temps) {
    if (temps.size() < 2 || temps.front() != 0.0 || temps.back() != 1.0)
        throw config_error("power posterior temperatures must run from 0 to 1");
    for (std::size_t i = 1; i < temps.size(); ++i)
        if (temps[i] <= temps[i - 1])
            throw config_error("power posterior temperatures must be strictly increasing");

    DensitySequence seq;
    seq.param_names = {"tau"};
    for (double tau : temps) seq.stage_params.push_back(Vec::Constant(1, tau));
    seq.sample_initial = std::move(sample_prior);
    seq.log_kernel = [lp = std::move(log_prior), ll = std::move(log_lik),
                      temps](const Vec& theta, int t) {
        const double tau = temps[static_cast<std::size_t>(t)];
        return lp(theta) + (tau == 0.0 ? 0.0 : tau * ll(theta));
    };
    return seq;
}

/// Data tempering bridge: stage t includes the first counts[t] observations,
/// 0 = counts_0 <= ... <= counts_T = n.
inline DensitySequence data_tempering_sequence(
    std::function<double(const Vec&)> log_prior,
    std::function<double(int, const Vec&)> per_datum_log_lik,
    std::function<Vec(std::mt19937_64&)> sample_prior,
    const std::vector<int>& counts, int n) {
    if (counts.size() < 2 || counts.front() != 0 || counts.back() != n)
        throw config_error("data tempering counts must run from 0 to n");
    for (std::size_t i = 1; i < counts.size(); ++i) {
        if (counts[i] < counts[i - 1])
            throw config_error("data tempering counts must be non-decreasing");
        if (counts[i] > n) throw config_error("data tempering count exceeds n");
    }

    DensitySequence seq;
    seq.param_names = {"count"};
    for (int c : counts) seq.stage_params.push_back(Vec::Constant(1, c));
    seq.sample_initial = std::move(sample_prior);
    seq.log_kernel = [lp = std::move(log_prior), ll = std::move(per_datum_log_lik),
                      counts](const Vec& theta, int t) {
        double v = lp(theta);
        const int c = counts[static_cast<std::size_t>(t)];
        for (int i = 0; i < c; ++i) v += ll(i, theta);
        return v;
    };
    return seq;
}

}  // namespace scmc

#endif  // SCMC_SEQUENCE_HPP
