#ifndef SCMC_ABC_HPP
#define SCMC_ABC_HPP

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "scmc/engine.hpp"
#include "scmc/errors.hpp"
#include "scmc/mh.hpp"
#include "scmc/particles.hpp"
#include "scmc/rng.hpp"
#include "scmc/stats.hpp"
#include "scmc/types.hpp"

namespace scmc {

/// Scaled Ricker map parameters: growth rate r, process-noise variance
/// sigma2_e, Poisson observation scaling phi.
struct RickerParams {
    double r = 1.0;
    double sigma2_e = 0.1;
    double phi = 1.0;
};

/// N_{v+1} = r N_v exp(-N_v + e_v), e_v ~ N(0, sigma2_e); observed counts
/// y_v ~ Poisson(phi N_v).
inline Vec ricker_simulate(const RickerParams& p, int n, double n0, std::mt19937_64& rng) {
    if (n < 1) throw config_error("need at least one observation");
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sigma_e = std::sqrt(p.sigma2_e);
    Vec y(n);
    double pop = n0;
    for (int v = 0; v < n; ++v) {
        const double e = sigma_e * normal(rng);
        pop = p.r * pop * std::exp(-pop + e);
        if (!std::isfinite(pop) || pop > 1e12)
            throw numerical_error("Ricker population overflow");
        const double mean = p.phi * pop;
        if (mean <= 0.0) {
            y[v] = 0.0;
        } else {
            std::poisson_distribution<long> pois(mean);
            y[v] = static_cast<double>(pois(rng));
        }
    }
    return y;
}

/// The seven Ricker summaries: median, mean, mean of counts exceeding 1
/// (0 when none exceed), #{y > 10}, #{y = 0}, 75% quantile, max.
inline Vec ricker_summaries(const Vec& y) {
    const Index n = y.size();
    Vec s(7);
    s[0] = quantile(y, 0.5);
    s[1] = y.mean();
    double exceed_sum = 0.0;
    int exceed_count = 0, over10 = 0, zeros = 0;
    for (Index i = 0; i < n; ++i) {
        if (y[i] > 1.0) {
            exceed_sum += y[i];
            ++exceed_count;
        }
        if (y[i] > 10.0) ++over10;
        if (y[i] == 0.0) ++zeros;
    }
    s[2] = exceed_count > 0 ? exceed_sum / exceed_count : 0.0;
    s[3] = over10;
    s[4] = zeros;
    s[5] = quantile(y, 0.75);
    s[6] = y.maxCoeff();
    return s;
}

/// Nested matching sets A_t: a replicate matches when |s_j(z) - s_j(y)| < eps_j
/// for all active summaries j <= t.
struct MatchCriteria {
    Vec s_obs;
    Vec eps;
    int active_count = 1;
};

/// Number of replicates (rows of summary matrix Z) inside A_t.
inline int match_count(const Mat& z_summaries, const MatchCriteria& crit) {
    if (crit.active_count < 1 || crit.active_count > crit.s_obs.size())
        throw config_error("active summary count out of range");
    int w = 0;
    for (Index k = 0; k < z_summaries.rows(); ++k) {
        bool ok = true;
        for (int j = 0; j < crit.active_count && ok; ++j)
            ok = std::abs(z_summaries(k, j) - crit.s_obs[j]) < crit.eps[j];
        if (ok) ++w;
    }
    return w;
}

struct ProposalDraw {
    Vec proposed;
    double log_hastings = 0.0;  // log q(backward) - log q(forward)
};

/// Likelihood-free model interface for the SCMC ABC engine. `simulate`
/// returns the summary vector of one fresh synthetic dataset.
struct AbcModel {
    int dim = 0;
    std::function<Vec(std::mt19937_64&)> sample_prior;
    std::function<double(const Vec&)> log_prior;
    std::function<Vec(const Vec&, std::mt19937_64&)> simulate;
    std::function<ProposalDraw(const Vec&, std::mt19937_64&)> propose;
};

struct AbcConfig {
    std::uint64_t seed = 0;
    int particles = 1000;
    int replicates = 100;  // M
    int sweeps = 5;
    int threads = 1;
    ResampleMethod resample_method = ResampleMethod::systematic;
    long max_prior_draws_per_slot = 100000;  // stage-1 rejection budget
};

/// SCMC ABC: stage 1 fills each particle slot by prior rejection against
/// A_1, weighting by the replicate match count; stages t = 2..T reweight by
/// the ratio of match counts on the current replicates, resample, and move
/// (theta, Z) jointly by a pseudo-marginal MH step that regenerates Z on
/// every proposal.
inline std::pair<ParticleEnsemble, RunTrace> run_scmc_abc(const AbcModel& model,
                                                          const Vec& s_obs, const Vec& eps,
                                                          const AbcConfig& config) {
    const Index n = config.particles;
    const int M = config.replicates;
    const int T = static_cast<int>(s_obs.size());
    if (n < 2) throw config_error("at least two particles required");
    if (M < 1) throw config_error("at least one replicate per particle required");

    ParticleEnsemble ens;
    ens.particles.resize(n, model.dim);
    ens.log_weights.resize(n);
    ens.aux.resize(static_cast<std::size_t>(n));  // per-particle M x T summary matrix

    RunTrace trace;
    trace.param_names = {"active_summaries"};

    // Stage 1: rejection from the prior against A_1. Each slot owns its RNG
    // substream and loops independently, so the fill is thread-invariant.
    MatchCriteria crit{s_obs, eps, 1};
    parallel_for(n, config.threads, [&](Index i) {
        auto r = rng::substream(config.seed, 1, static_cast<std::uint64_t>(i));
        for (long attempt = 0; attempt < config.max_prior_draws_per_slot; ++attempt) {
            const Vec theta = model.sample_prior(r);
            Mat z(M, T);
            for (int k = 0; k < M; ++k) z.row(k) = model.simulate(theta, r);
            const int w = match_count(z, crit);
            if (w > 0) {
                ens.particles.row(i) = theta;
                ens.aux[static_cast<std::size_t>(i)] = std::move(z);
                ens.log_weights[i] = std::log(static_cast<double>(w));
                return;
            }
        }
        throw degenerate_error("prior-predictive mismatch: stage-1 acceptance below budget");
    });

    auto resample_stage = [&](int t) {
        auto r = rng::substream(config.seed, static_cast<std::uint64_t>(t), 0, /*tag=*/1);
        ens = resample(ens, config.resample_method, r);
    };

    {
        StageRecord rec;
        rec.t = 1;
        rec.params = Vec::Constant(1, 1.0);
        rec.ess = ess(normalize_log_weights(ens.log_weights));
        rec.resampled = true;
        resample_stage(1);
        rec.has_checkpoint = true;
        rec.checkpoint = ens;
        trace.stages.push_back(std::move(rec));
    }

    std::vector<int> w_current(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
        w_current[static_cast<std::size_t>(i)] =
            match_count(ens.aux[static_cast<std::size_t>(i)], crit);

    for (int t = 2; t <= T; ++t) {
        const MatchCriteria crit_t{s_obs, eps, t};
        // Reweight by w_t / w_{t-1} on the current replicates.
        for (Index i = 0; i < n; ++i) {
            const int w_prev = w_current[static_cast<std::size_t>(i)];
            const int w_new = match_count(ens.aux[static_cast<std::size_t>(i)], crit_t);
            ens.log_weights[i] += (w_new == 0 ? neg_inf
                                              : std::log(static_cast<double>(w_new)) -
                                                    std::log(static_cast<double>(w_prev)));
            w_current[static_cast<std::size_t>(i)] = w_new;
        }
        StageRecord rec;
        rec.t = t;
        rec.params = Vec::Constant(1, static_cast<double>(t));
        try {
            ens.log_weights = normalize_log_weights(ens.log_weights);
        } catch (const degenerate_error&) {
            throw degenerate_error("summary-order degeneracy at stage " + std::to_string(t));
        }
        rec.ess = ess(ens.log_weights);
        rec.resampled = true;

        // Resample (theta, Z) jointly; gather the match counts by ancestor.
        {
            auto r = rng::substream(config.seed, static_cast<std::uint64_t>(t), 0, /*tag=*/1);
            Vec w(n);
            for (Index i = 0; i < n; ++i) w[i] = std::exp(ens.log_weights[i]);
            const std::vector<Index> anc = resample_indices(w, config.resample_method, r);
            ParticleEnsemble next;
            next.particles.resize(n, ens.dim());
            next.log_weights = Vec::Constant(n, -std::log(static_cast<double>(n)));
            next.aux.resize(static_cast<std::size_t>(n));
            std::vector<int> next_w(static_cast<std::size_t>(n));
            for (Index i = 0; i < n; ++i) {
                const Index a = anc[static_cast<std::size_t>(i)];
                next.particles.row(i) = ens.particles.row(a);
                next.aux[static_cast<std::size_t>(i)] = ens.aux[static_cast<std::size_t>(a)];
                next_w[static_cast<std::size_t>(i)] = w_current[static_cast<std::size_t>(a)];
            }
            ens = std::move(next);
            w_current = std::move(next_w);
        }

        // Pseudo-marginal MH move at A_t.
        std::vector<int> accepted(static_cast<std::size_t>(n), 0);
        parallel_for(n, config.threads, [&](Index i) {
            auto r = rng::substream(config.seed, static_cast<std::uint64_t>(t),
                                    static_cast<std::uint64_t>(i), /*tag=*/2);
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            Vec theta = ens.particles.row(i);
            int w = w_current[static_cast<std::size_t>(i)];
            double lp = model.log_prior(theta);
            for (int s = 0; s < config.sweeps; ++s) {
                const ProposalDraw prop = model.propose(theta, r);
                const double lp_prop = model.log_prior(prop.proposed);
                if (lp_prop == neg_inf) continue;
                Mat z_prop(M, T);
                bool sim_ok = true;
                try {
                    for (int k = 0; k < M; ++k) z_prop.row(k) = model.simulate(prop.proposed, r);
                } catch (const numerical_error&) {
                    sim_ok = false;  // diverging simulator: treat as zero match
                }
                if (!sim_ok) continue;
                const int w_prop = match_count(z_prop, crit_t);
                if (w_prop == 0) continue;
                const double log_alpha = lp_prop - lp + prop.log_hastings +
                                         std::log(static_cast<double>(w_prop)) -
                                         std::log(static_cast<double>(w));
                if (log_alpha >= 0.0 || std::log(u01(r)) < log_alpha) {
                    theta = prop.proposed;
                    lp = lp_prop;
                    w = w_prop;
                    ens.aux[static_cast<std::size_t>(i)] = std::move(z_prop);
                    ++accepted[static_cast<std::size_t>(i)];
                }
            }
            ens.particles.row(i) = theta;
            w_current[static_cast<std::size_t>(i)] = w;
        });
        rec.acceptance = 0.0;
        for (Index i = 0; i < n; ++i) rec.acceptance += accepted[static_cast<std::size_t>(i)];
        rec.acceptance /= static_cast<double>(n) * config.sweeps;
        rec.has_checkpoint = true;
        rec.checkpoint = ens;
        trace.stages.push_back(std::move(rec));
    }
    return {std::move(ens), std::move(trace)};
}

/// Ricker experiment priors: log r ~ N(4, 1), phi ~ chi-square(10),
/// sigma2_e ~ InvGamma(3, 0.5). Components move by the chi-square kernel
/// with df equal to the current value.
inline AbcModel make_ricker_model(int n_obs = 50, double n0 = 1.0) {
    AbcModel m;
    m.dim = 3;  // (r, sigma2_e, phi)
    m.sample_prior = [](std::mt19937_64& rng) {
        std::normal_distribution<double> normal(0.0, 1.0);
        Vec theta(3);
        theta[0] = std::exp(4.0 + normal(rng));
        theta[1] = sample_inv_gamma(3.0, 0.5, rng);
        theta[2] = sample_chi_square(10.0, rng);
        return theta;
    };
    m.log_prior = [](const Vec& theta) {
        const double r = theta[0], sigma2 = theta[1], phi = theta[2];
        if (r <= 0.0 || sigma2 <= 0.0 || phi <= 0.0) return neg_inf;
        const double lr = std::log(r);
        return log_normal_pdf(lr, 4.0, 1.0) - lr + log_inv_gamma_pdf(sigma2, 3.0, 0.5) +
               log_chi_square_pdf(phi, 10.0);
    };
    m.simulate = [n_obs, n0](const Vec& theta, std::mt19937_64& rng) {
        RickerParams p{theta[0], theta[1], theta[2]};
        return ricker_summaries(ricker_simulate(p, n_obs, n0, rng));
    };
    m.propose = [](const Vec& theta, std::mt19937_64& rng) {
        ProposalDraw d;
        d.proposed.resize(theta.size());
        for (Index i = 0; i < theta.size(); ++i) {
            const ChiSquareDraw c = chi_square_proposal(theta[i], rng);
            d.proposed[i] = c.proposed;
            d.log_hastings += c.log_q_backward - c.log_q_forward;
        }
        return d;
    };
    return m;
}

/// Default tolerance vector for the Ricker experiment.
inline Vec ricker_tolerances() {
    Vec eps(7);
    eps << 1.0, 1.88, 6.25, 1.0, 2.0, 10.0, 35.0;
    return eps;
}

}  // namespace scmc

#endif  // SCMC_ABC_HPP
