#ifndef SCMC_SIR_HPP
#define SCMC_SIR_HPP

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "scmc/errors.hpp"
#include "scmc/sequence.hpp"
#include "scmc/stats.hpp"
#include "scmc/types.hpp"

namespace scmc {

/// Closed-population SIR parameters: alpha is the removal (death) rate,
/// beta the transmissivity per person per day, i0 the initial infected count.
struct SIRParams {
    double alpha = 0.0;
    double beta = 0.0;
    int i0 = 0;
    int n_pop = 261;
};

inline Eigen::Vector3d sir_rhs(const Eigen::Vector3d& state, const SIRParams& p) {
    const double s = state[0], i = state[1];
    Eigen::Vector3d d;
    d[0] = -p.beta * s * i;
    d[1] = p.beta * s * i - p.alpha * i;
    d[2] = p.alpha * i;
    return d;
}

/// Classical fixed-step RK4 from t0, linearly interpolated onto t_grid.
/// Aborts with an "unstable trajectory" error if any state exceeds 1e12.
inline Mat rk4_solve(const std::function<Vec(double, const Vec&)>& rhs, const Vec& x0,
                     double t0, const Vec& t_grid, double h) {
    if (h <= 0.0) throw config_error("RK4 step must be positive");
    const Index n = t_grid.size();
    for (Index i = 0; i < n; ++i) {
        if (t_grid[i] < t0 || (i > 0 && t_grid[i] <= t_grid[i - 1]))
            throw config_error("t_grid must be increasing and start at or after t0");
    }
    Mat out(n, x0.size());
    Vec x = x0;
    double t = t0;
    Index next = 0;
    auto check = [&](const Vec& v) {
        if (!v.allFinite() || v.cwiseAbs().maxCoeff() > 1e12)
            throw numerical_error("unstable trajectory at t=" + std::to_string(t));
    };
    check(x);
    while (next < n) {
        // emit any grid points inside the step [t, t+h] by linear interpolation
        if (t_grid[next] <= t + 1e-12) {
            out.row(next++) = x;
            continue;
        }
        const Vec k1 = rhs(t, x);
        const Vec k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
        const Vec k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
        const Vec k4 = rhs(t + h, x + h * k3);
        const Vec x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        while (next < n && t_grid[next] <= t + h + 1e-12) {
            const double f = (t_grid[next] - t) / h;
            out.row(next) = (1.0 - f) * x + f * x_next;
            ++next;
        }
        x = x_next;
        t += h;
        check(x);
    }
    return out;
}

struct SolvedStates {
    Vec t;
    Vec S;
    Vec I;
    Vec R;
};

inline SolvedStates solve_sir(const SIRParams& p, const Vec& t_grid, double h = 0.1) {
    Vec x0(3);
    x0 << static_cast<double>(p.n_pop - p.i0), static_cast<double>(p.i0), 0.0;
    if (x0[0] < 0.0) throw config_error("initial infected exceeds population");
    const Mat states = rk4_solve(
        [&p](double, const Vec& x) -> Vec {
            return sir_rhs(Eigen::Vector3d(x[0], x[1], x[2]), p);
        },
        x0, 0.0, t_grid, h);
    SolvedStates s;
    s.t = t_grid;
    s.S = states.col(0);
    s.I = states.col(1);
    s.R = states.col(2);
    return s;
}

/// Nadaraya-Watson smoother with Gaussian kernel: weighted local average of
/// residuals. b -> 0 interpolates at the observation times exactly; b -> inf
/// returns the constant residual mean.
inline Vec nw_smooth(const Vec& t_obs, const Vec& residuals, double b, const Vec& t_eval) {
    if (b < 0.0) throw config_error("bandwidth must be non-negative");
    const Index n = t_obs.size();
    Vec out(t_eval.size());
    if (b == 0.0) {
        for (Index e = 0; e < t_eval.size(); ++e) {
            Index hit = -1;
            for (Index i = 0; i < n; ++i)
                if (t_eval[e] == t_obs[i]) { hit = i; break; }
            if (hit < 0) throw config_error("interpolation bandwidth off-grid");
            out[e] = residuals[hit];
        }
        return out;
    }
    for (Index e = 0; e < t_eval.size(); ++e) {
        double num = 0.0, den = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double u = (t_eval[e] - t_obs[i]) / b;
            const double k = std::exp(-0.5 * u * u);
            num += k * residuals[i];
            den += k;
        }
        out[e] = num / den;
    }
    return out;
}

/// Relaxed binomial log likelihood: solve R(theta, nu), smooth the residuals
/// y - R at bandwidth b, form r_hat = R + xi * e, clamp r_hat/N_pop into
/// [1e-9, 1-1e-9], and sum Binomial(y_i; N_pop, p_i) log masses. With xi = 0
/// the smoother is skipped entirely, so the value is independent of b.
inline double relaxed_loglik(const SIRParams& p, double b, double xi, const Vec& y,
                             const Vec& t_obs, double h = 0.1) {
    Vec r_hat;
    if (xi == 1.0 && b == 0.0) {
        // the interpolating smoother absorbs the residuals completely:
        // r_hat = R + (y - R) = y, theta-free, so skip the solve
        r_hat = y;
    } else {
        const SolvedStates s = solve_sir(p, t_obs, h);
        r_hat = s.R;
        if (xi != 0.0) {
            const Vec resid = y - s.R;
            r_hat += xi * nw_smooth(t_obs, resid, b, t_obs);
        }
    }
    const double n_pop = static_cast<double>(p.n_pop);
    double ll = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
        const double prob = std::min(1.0 - 1e-9, std::max(1e-9, r_hat[i] / n_pop));
        ll += log_binomial_pmf(y[i], n_pop, prob);
    }
    return ll;
}

/// Relaxation stage: bandwidth b and discrepancy coefficient xi.
struct RelaxStage {
    double b = 0.0;
    double xi = 1.0;
};

/// b = 0 at xi = 1 (flat start), then b rising 2 -> 26 in `b_steps` linear
/// steps at xi = 1, then xi falling 1 -> 0 in `xi_steps` linear steps at the
/// final bandwidth.
inline std::vector<RelaxStage> default_relax_schedule(int b_steps = 25, int xi_steps = 25,
                                                      double b_min = 2.0, double b_max = 26.0) {
    std::vector<RelaxStage> stages;
    stages.push_back({0.0, 1.0});
    for (int k = 0; k < b_steps; ++k) {
        const double f = b_steps == 1 ? 1.0 : static_cast<double>(k) / (b_steps - 1);
        stages.push_back({b_min + f * (b_max - b_min), 1.0});
    }
    for (int k = 1; k <= xi_steps; ++k)
        stages.push_back({b_max, 1.0 - static_cast<double>(k) / xi_steps});
    return stages;
}

inline void validate_relax_schedule(const std::vector<RelaxStage>& stages) {
    if (stages.size() < 2) throw config_error("relaxation schedule needs at least two stages");
    if (stages.front().xi != 1.0 || stages.back().xi != 0.0)
        throw config_error("relaxation schedule must run xi from 1 to 0");
    bool xi_phase = false;
    for (std::size_t i = 1; i < stages.size(); ++i) {
        const bool b_grew = stages[i].b > stages[i - 1].b;
        const bool xi_fell = stages[i].xi < stages[i - 1].xi;
        if (xi_fell) xi_phase = true;
        if (xi_phase && (b_grew || stages[i].xi >= stages[i - 1].xi))
            throw config_error("relaxation schedule: xi phase must hold b fixed and decrease xi");
        if (!xi_phase && (!b_grew || stages[i].xi != 1.0))
            throw config_error("relaxation schedule: b phase must increase b at xi=1");
    }
}

/// Priors: alpha, beta ~ Gamma(1,1); I0 ~ Binomial(N_pop, 5/N_pop).
inline double sir_log_prior(const Vec& theta, int n_pop) {
    const double alpha = theta[0], beta = theta[1], i0 = theta[2];
    if (alpha <= 0.0 || beta <= 0.0) return neg_inf;
    if (i0 < 0.0 || i0 > n_pop || i0 != std::floor(i0)) return neg_inf;
    return -alpha - beta +
           log_binomial_pmf(i0, static_cast<double>(n_pop), 5.0 / n_pop);
}

inline Vec sir_sample_prior(int n_pop, std::mt19937_64& rng) {
    std::exponential_distribution<double> exp1(1.0);
    std::binomial_distribution<int> bin(n_pop, 5.0 / n_pop);
    Vec theta(3);
    theta[0] = exp1(rng);
    theta[1] = exp1(rng);
    theta[2] = static_cast<double>(bin(rng));
    return theta;
}

/// Stage-t log kernel = log prior(alpha, beta, I0) + relaxed log likelihood
/// at (b_t, xi_t). Stage 0 must sit at (b=0, xi=1), where the relaxed
/// likelihood is constant in theta, so the prior sampler draws pi_0 exactly.
inline DensitySequence build_relax_sequence(const std::vector<RelaxStage>& stages,
                                            const Vec& y, const Vec& t_obs,
                                            int n_pop = 261, double h = 0.1) {
    validate_relax_schedule(stages);
    if (stages.front().b != 0.0)
        throw config_error("relaxation schedule must start at b=0, xi=1");
    DensitySequence seq;
    seq.param_names = {"b", "xi"};
    for (const RelaxStage& st : stages) {
        Vec p(2);
        p << st.b, st.xi;
        seq.stage_params.push_back(p);
    }
    seq.sample_initial = [n_pop](std::mt19937_64& rng) { return sir_sample_prior(n_pop, rng); };
    seq.log_kernel = [stages, y, t_obs, n_pop, h](const Vec& theta, int t) {
        const double lp = sir_log_prior(theta, n_pop);
        if (lp == neg_inf) return neg_inf;
        const RelaxStage& st = stages[static_cast<std::size_t>(t)];
        SIRParams p;
        p.alpha = theta[0];
        p.beta = theta[1];
        p.i0 = static_cast<int>(theta[2]);
        p.n_pop = n_pop;
        try {
            return lp + relaxed_loglik(p, st.b, st.xi, y, t_obs, h);
        } catch (const numerical_error&) {
            // numerically unstable trajectory under the fixed-step solver:
            // such theta cannot be scored, so they carry zero density
            return neg_inf;
        }
    };
    return seq;
}

/// Synthetic substitute for the historical death records:
/// y_i ~ Binomial(N_pop, R(theta, nu_i)/N_pop) on the observation grid.
inline Vec sir_synthetic_data(const SIRParams& truth, const Vec& t_obs,
                              std::mt19937_64& rng, double h = 0.1) {
    const SolvedStates s = solve_sir(truth, t_obs, h);
    Vec y(t_obs.size());
    for (Index i = 0; i < y.size(); ++i) {
        const double prob = std::min(1.0, std::max(0.0, s.R[i] / truth.n_pop));
        std::binomial_distribution<int> bin(truth.n_pop, prob);
        y[i] = prob == 0.0 ? 0.0 : static_cast<double>(bin(rng));
    }
    return y;
}

}  // namespace scmc

#endif  // SCMC_SIR_HPP
