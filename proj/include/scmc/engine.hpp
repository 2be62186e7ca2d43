#ifndef SCMC_ENGINE_HPP
#define SCMC_ENGINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "scmc/errors.hpp"
#include "scmc/mh.hpp"
#include "scmc/particles.hpp"
#include "scmc/rng.hpp"
#include "scmc/sequence.hpp"
#include "scmc/types.hpp"

namespace scmc {

/// Static-chunk parallel loop. Each index owns its RNG substream, so the
/// partitioning never affects results.
inline void parallel_for(Index n, int threads, const std::function<void(Index)>& body) {
    if (threads <= 1 || n < 2) {
        for (Index i = 0; i < n; ++i) body(i);
        return;
    }
    const int nt = std::min<int>(threads, static_cast<int>(n));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nt));
    std::exception_ptr eptr = nullptr;
    std::mutex eptr_mutex;
    for (int k = 0; k < nt; ++k) {
        pool.emplace_back([&, k] {
            const Index lo = n * k / nt;
            const Index hi = n * (k + 1) / nt;
            try {
                for (Index i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(eptr_mutex);
                if (!eptr) eptr = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (eptr) std::rethrow_exception(eptr);
}

struct StageRecord {
    int t = 0;
    Vec params;
    double ess = 0.0;        // before any resampling at this stage
    bool resampled = false;
    double acceptance = 0.0; // MH acceptance rate across particles and sweeps
    bool has_checkpoint = false;
    ParticleEnsemble checkpoint;
};

struct RunTrace {
    std::vector<std::string> param_names;
    std::vector<StageRecord> stages;  // T+1 records, t = 0..T
};

struct SmcConfig {
    std::uint64_t seed = 0;
    int particles = 1000;
    double resample_fraction = 0.5;  // resample when ESS < fraction * N
    ResampleMethod resample_method = ResampleMethod::systematic;
    int threads = 1;
    std::vector<int> checkpoint_stages;  // empty: first, last, every ceil(T/10)th
};

/// Kernel factory; receives the (post-resampling) stage-t ensemble so that
/// proposal scales can adapt to the current particle spread.
using KernelFactory = std::function<MutationKernel(int, const ParticleEnsemble&)>;

/// Per-particle log increment log eta_t(theta) - log eta_{t-1}(theta) for the
/// particles held at stage t-1. Composes with prior log weights by addition.
inline Vec incremental_weights(const ParticleEnsemble& ensemble,
                               const DensitySequence& seq, int t) {
    if (t < 1 || t > seq.num_stages())
        throw config_error("stage index out of range in incremental_weights");
    Vec inc(ensemble.size());
    for (Index j = 0; j < ensemble.size(); ++j) {
        const Vec theta = ensemble.particles.row(j);
        const double prev = seq.log_kernel(theta, t - 1);
        const double next = seq.log_kernel(theta, t);
        if (prev == neg_inf && next > neg_inf)
            throw numerical_error("support widening violates sequence at stage " +
                                  std::to_string(t));
        inc[j] = (prev == neg_inf) ? neg_inf : next - prev;
    }
    return inc;
}

/// Per-component weighted standard deviations; the default source of
/// stage-adapted proposal scales.
inline Vec weighted_component_sd(const ParticleEnsemble& ensemble) {
    const Vec norm = normalize_log_weights(ensemble.log_weights);
    Vec w(norm.size());
    for (Index i = 0; i < norm.size(); ++i) w[i] = std::exp(norm[i]);
    Vec sd(ensemble.dim());
    for (Index c = 0; c < ensemble.dim(); ++c) {
        const double mean = w.dot(ensemble.particles.col(c));
        const Vec centered = ensemble.particles.col(c).array() - mean;
        sd[c] = std::sqrt(w.dot(centered.cwiseProduct(centered)));
    }
    return sd;
}

inline std::vector<int> default_checkpoints(int num_stages) {
    std::vector<int> cp{0, num_stages};
    const int stride = (num_stages + 9) / 10;
    for (int t = stride; t < num_stages; t += stride) cp.push_back(t);
    std::sort(cp.begin(), cp.end());
    cp.erase(std::unique(cp.begin(), cp.end()), cp.end());
    return cp;
}

/// The SCMC loop: per stage t = 1..T, weight update via incremental ratios,
/// normalize, resample when ESS < fraction*N (strict), then one MH mutation
/// pass per particle through the stage-t kernel. Deterministic given
/// (seed, N, T) for any thread count.
inline std::pair<ParticleEnsemble, RunTrace> run_scmc(const DensitySequence& seq,
                                                      const KernelFactory& kernel_factory,
                                                      const SmcConfig& config) {
    const int T = seq.num_stages();
    const Index n = config.particles;
    if (n < 2) throw config_error("at least two particles required");
    if (T < 1) throw config_error("at least one stage required");

    std::vector<int> checkpoints =
        config.checkpoint_stages.empty() ? default_checkpoints(T) : config.checkpoint_stages;
    auto checkpoint_at = [&](int t) {
        return std::find(checkpoints.begin(), checkpoints.end(), t) != checkpoints.end();
    };

    ParticleEnsemble ens;
    Vec cached_log_kernel(n);  // log eta_t at the current particles
    {
        Vec first = [&] {
            auto r = rng::substream(config.seed, 0, 0);
            return seq.sample_initial(r);
        }();
        ens.particles.resize(n, first.size());
        ens.particles.row(0) = first;
        ens.log_weights = Vec::Constant(n, -std::log(static_cast<double>(n)));
        parallel_for(n, config.threads, [&](Index j) {
            if (j > 0) {
                auto r = rng::substream(config.seed, 0, static_cast<std::uint64_t>(j));
                ens.particles.row(j) = seq.sample_initial(r);
            }
            cached_log_kernel[j] = seq.log_kernel(ens.particles.row(j), 0);
        });
    }

    RunTrace trace;
    trace.param_names = seq.param_names;
    {
        StageRecord rec;
        rec.t = 0;
        rec.params = seq.stage_params[0];
        rec.ess = static_cast<double>(n);
        if (checkpoint_at(0)) {
            rec.has_checkpoint = true;
            rec.checkpoint = ens;
        }
        trace.stages.push_back(std::move(rec));
    }

    for (int t = 1; t <= T; ++t) {
        // Weight update on the stage-(t-1) particles.
        Vec next_log_kernel(n);
        parallel_for(n, config.threads, [&](Index j) {
            next_log_kernel[j] = seq.log_kernel(ens.particles.row(j), t);
        });
        for (Index j = 0; j < n; ++j) {
            if (cached_log_kernel[j] == neg_inf && next_log_kernel[j] > neg_inf)
                throw numerical_error("support widening violates sequence at stage " +
                                      std::to_string(t));
            if (cached_log_kernel[j] == neg_inf || next_log_kernel[j] == neg_inf)
                ens.log_weights[j] = neg_inf;  // outside the narrowing support
            else
                ens.log_weights[j] += next_log_kernel[j] - cached_log_kernel[j];
        }
        try {
            ens.log_weights = normalize_log_weights(ens.log_weights);
        } catch (const degenerate_error&) {
            throw degenerate_error(
                "degenerate ensemble at stage " + std::to_string(t) +
                " (constraint value " + std::to_string(seq.stage_params[static_cast<std::size_t>(t)][0]) + ")");
        }
        cached_log_kernel = next_log_kernel;

        StageRecord rec;
        rec.t = t;
        rec.params = seq.stage_params[static_cast<std::size_t>(t)];
        rec.ess = ess(ens.log_weights);
        rec.resampled = rec.ess < config.resample_fraction * static_cast<double>(n);
        if (rec.resampled) {
            auto r = rng::substream(config.seed, static_cast<std::uint64_t>(t), 0, /*tag=*/1);
            const Vec norm = ens.log_weights;
            Vec w(n);
            for (Index j = 0; j < n; ++j) w[j] = std::exp(norm[j]);
            const std::vector<Index> anc = resample_indices(w, config.resample_method, r);
            Mat resampled_particles(n, ens.dim());
            Vec resampled_cache(n);
            for (Index j = 0; j < n; ++j) {
                resampled_particles.row(j) = ens.particles.row(anc[static_cast<std::size_t>(j)]);
                resampled_cache[j] = cached_log_kernel[anc[static_cast<std::size_t>(j)]];
            }
            ens.particles = std::move(resampled_particles);
            cached_log_kernel = std::move(resampled_cache);
            ens.log_weights = Vec::Constant(n, -std::log(static_cast<double>(n)));
        }

        // Mutation through the stage-t invariant kernel.
        const MutationKernel kernel = kernel_factory(t, ens);
        std::vector<int> accepted(static_cast<std::size_t>(n), 0);
        int total_sweeps = std::max(kernel.sweeps, 1);
        if (!kernel.proposals.empty()) {
            parallel_for(n, config.threads, [&](Index j) {
                // zero-weight particles outside the stage support stay put
                if (ens.log_weights[j] == neg_inf || cached_log_kernel[j] == neg_inf) return;
                auto r = rng::substream(config.seed, static_cast<std::uint64_t>(t),
                                        static_cast<std::uint64_t>(j), /*tag=*/2);
                MoveResult mv = mh_move(ens.particles.row(j), kernel, r);
                ens.particles.row(j) = mv.state;
                cached_log_kernel[j] = mv.log_target;
                accepted[static_cast<std::size_t>(j)] = mv.accepted;
            });
            rec.acceptance = 0.0;
            for (Index j = 0; j < n; ++j) rec.acceptance += accepted[static_cast<std::size_t>(j)];
            rec.acceptance /= static_cast<double>(n) * total_sweeps;
            if (rec.acceptance < 0.05)
                std::fprintf(stderr, "warning: stage %d MH acceptance rate %.4f below 0.05\n",
                             t, rec.acceptance);
        }

        if (checkpoint_at(t)) {
            rec.has_checkpoint = true;
            rec.checkpoint = ens;
        }
        trace.stages.push_back(std::move(rec));
    }
    return {std::move(ens), std::move(trace)};
}

}  // namespace scmc

#endif  // SCMC_ENGINE_HPP
