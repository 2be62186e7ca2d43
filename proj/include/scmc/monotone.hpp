#ifndef SCMC_MONOTONE_HPP
#define SCMC_MONOTONE_HPP

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "scmc/errors.hpp"
#include "scmc/particles.hpp"
#include "scmc/probit.hpp"
#include "scmc/sequence.hpp"
#include "scmc/stats.hpp"
#include "scmc/types.hpp"

namespace scmc {

/// Fixed-order polynomial design. X is the Vandermonde matrix on the design
/// points; D is its elementwise x-derivative, so row i of D is
/// (0, 1, 2 x_i, ..., p x_i^{p-1}).
struct PolyModel {
    int order = 1;
    Vec x;
    Mat X;
    Mat D;
};

inline PolyModel make_poly_model(const Vec& x, int order) {
    const Index n = x.size();
    if (order < 1) throw config_error("polynomial order must be positive");
    if (n < order + 1) throw config_error("need at least p+1 design points");
    for (Index i = 0; i < n; ++i)
        if (x[i] < 0.0 || x[i] > 1.0) throw config_error("design points must lie in [0,1]");

    PolyModel m;
    m.order = order;
    m.x = x;
    m.X.resize(n, order + 1);
    m.D.setZero(n, order + 1);
    for (Index i = 0; i < n; ++i) {
        double pow_x = 1.0;
        for (int k = 0; k <= order; ++k) {
            m.X(i, k) = pow_x;
            if (k >= 1) m.D(i, k) = k * m.X(i, k - 1);
            pow_x *= x[i];
        }
    }
    Eigen::ColPivHouseholderQR<Mat> qr(m.X);
    if (qr.rank() < order + 1) throw numerical_error("singular design");
    return m;
}

/// Normal-inverse-gamma prior: beta | sigma^2 ~ N(m0, sigma^2 V0),
/// sigma^2 ~ InvGamma(a0, b0).
struct NIGHyper {
    Vec m0;
    Mat V0;
    double a0 = 1.0;
    double b0 = 1.0;

    static NIGHyper diffuse(int order) {
        NIGHyper h;
        h.m0 = Vec::Zero(order + 1);
        h.V0 = 100.0 * Mat::Identity(order + 1, order + 1);
        return h;
    }
};

/// Closed-form conjugate posterior for the unconstrained regression.
struct NIGPosterior {
    Vec mn;
    Mat Vn;
    double an = 0.0;
    double bn = 0.0;
    Mat Vn_chol;  // lower Cholesky factor of Vn
};

inline NIGPosterior nig_posterior(const PolyModel& model, const Vec& y,
                                  const NIGHyper& hyper) {
    const Index n = y.size();
    const Mat V0_inv = hyper.V0.llt().solve(Mat::Identity(hyper.V0.rows(), hyper.V0.cols()));
    const Mat Vn_inv = V0_inv + model.X.transpose() * model.X;
    Eigen::LLT<Mat> llt(Vn_inv);
    if (llt.info() != Eigen::Success) {
        Eigen::JacobiSVD<Mat> svd(Vn_inv);
        const double cond = svd.singularValues()(0) /
                            svd.singularValues()(svd.singularValues().size() - 1);
        throw numerical_error("non-positive-definite posterior covariance (condition number " +
                              std::to_string(cond) + ")");
    }
    NIGPosterior post;
    post.Vn = llt.solve(Mat::Identity(Vn_inv.rows(), Vn_inv.cols()));
    post.mn = llt.solve(V0_inv * hyper.m0 + model.X.transpose() * y);
    post.an = hyper.a0 + 0.5 * static_cast<double>(n);
    post.bn = hyper.b0 + 0.5 * (y.squaredNorm() + hyper.m0.dot(V0_inv * hyper.m0) -
                                post.mn.dot(Vn_inv * post.mn));
    Eigen::LLT<Mat> lltV(post.Vn);
    if (lltV.info() != Eigen::Success)
        throw numerical_error("non-positive-definite posterior covariance");
    post.Vn_chol = lltV.matrixL();
    return post;
}

/// Exact draw (beta, sigma^2) from the conjugate posterior; emitted as a
/// single vector (beta_0..beta_p, sigma^2).
inline Vec nig_posterior_draw(const NIGPosterior& post, std::mt19937_64& rng) {
    const double sigma2 = sample_inv_gamma(post.an, post.bn, rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec z(post.mn.size());
    for (Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    Vec theta(post.mn.size() + 1);
    theta.head(post.mn.size()) = post.mn + std::sqrt(sigma2) * (post.Vn_chol * z);
    theta[post.mn.size()] = sigma2;
    return theta;
}

inline Vec nig_posterior_sample(const PolyModel& model, const Vec& y,
                                const NIGHyper& hyper, std::mt19937_64& rng) {
    return nig_posterior_draw(nig_posterior(model, y, hyper), rng);
}

/// log prior + Gaussian log likelihood + sum_i log Phi(tau (D beta)_i).
/// At tau = 0 this is the unconstrained log posterior kernel + n log(1/2).
inline double monotone_log_kernel(const PolyModel& model, const Vec& y,
                                  const NIGHyper& hyper, const Vec& beta,
                                  double sigma2, double tau) {
    if (sigma2 <= 0.0) return neg_inf;
    const Index n = y.size();
    const Index p1 = beta.size();

    const Vec centered = beta - hyper.m0;
    const Mat V0_inv = hyper.V0.llt().solve(Mat::Identity(p1, p1));
    double log_prior = -0.5 * centered.dot(V0_inv * centered) / sigma2 -
                       0.5 * static_cast<double>(p1) * std::log(sigma2) +
                       log_inv_gamma_pdf(sigma2, hyper.a0, hyper.b0);

    const Vec resid = y - model.X * beta;
    const double log_lik = -0.5 * static_cast<double>(n) * (log_2pi + std::log(sigma2)) -
                           0.5 * resid.squaredNorm() / sigma2;

    const Vec deriv = model.D * beta;
    double log_constraint = 0.0;
    for (Index i = 0; i < n; ++i) log_constraint += probit_log_factor(deriv[i], tau);
    return log_prior + log_lik + log_constraint;
}

enum class ToyFunction { f1, f2, f3 };

inline double toy_function_value(ToyFunction kind, double x) {
    switch (kind) {
        case ToyFunction::f1:
            return 0.1 + 0.3 * std::pow(x, 3) + 0.5 * std::pow(x, 5) +
                   0.7 * std::pow(x, 7) + 0.9 * std::pow(x, 9);
        case ToyFunction::f2:
            return std::log(20.0 * x + 1.0);
        case ToyFunction::f3:
            return 2.0 / (1.0 + std::exp(-10.0 * x + 5.0));
    }
    throw config_error("unknown toy function");
}

struct ToyData {
    Vec x;
    Vec y;
};

/// Equispaced grid on [0,1] with additive Gaussian noise on f(x).
inline ToyData generate_toy_data(ToyFunction kind, int n, double sigma_noise,
                                 std::mt19937_64& rng) {
    if (n < 2) throw config_error("toy data needs at least two points");
    if (sigma_noise < 0.0) throw config_error("noise level must be non-negative");
    ToyData d;
    d.x.resize(n);
    d.y.resize(n);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        d.x[i] = static_cast<double>(i) / (n - 1);
        d.y[i] = toy_function_value(kind, d.x[i]) + sigma_noise * normal(rng);
    }
    return d;
}

struct PosteriorBands {
    Vec mean;
    Vec lower;
    Vec upper;
};

/// Weighted mean and pointwise credible band of X beta over a grid design.
/// `draws` stacks (beta..., sigma^2) rows; log_weights may be unnormalized.
inline PosteriorBands posterior_bands(const Mat& draws, const Vec& log_weights,
                                      const Mat& grid_X, double level) {
    if (draws.rows() < 1) throw config_error("no posterior draws");
    const Index n_grid = grid_X.rows();
    const Index p1 = grid_X.cols();
    const Vec norm = normalize_log_weights(log_weights);
    Vec w(norm.size());
    for (Index i = 0; i < w.size(); ++i) w[i] = std::exp(norm[i]);

    const Mat curves = draws.leftCols(p1) * grid_X.transpose();  // draws x grid
    PosteriorBands bands;
    bands.mean.resize(n_grid);
    bands.lower.resize(n_grid);
    bands.upper.resize(n_grid);
    const double alpha = (1.0 - level) / 2.0;
    for (Index g = 0; g < n_grid; ++g) {
        const Vec col = curves.col(g);
        bands.mean[g] = w.dot(col);
        bands.lower[g] = weighted_quantile(col, w, alpha);
        bands.upper[g] = weighted_quantile(col, w, 1.0 - alpha);
    }
    return bands;
}

/// Full monotone-regression bridge: pi_0 is the exact conjugate posterior,
/// stage-t adds the probit monotonicity factors at tau_t. The tau values are
/// taken as given (a constant schedule is allowed; it reproduces pi_0).
inline DensitySequence monotone_sequence(const PolyModel& model, const Vec& y,
                                         const NIGHyper& hyper,
                                         const std::vector<double>& taus) {
    if (taus.empty()) throw config_error("empty tau schedule");
    const NIGPosterior post = nig_posterior(model, y, hyper);
    DensitySequence seq;
    seq.param_names = {"tau"};
    for (double tau : taus) {
        if (tau < 0.0) throw config_error("tau must be non-negative");
        seq.stage_params.push_back(Vec::Constant(1, tau));
    }
    seq.sample_initial = [post](std::mt19937_64& rng) { return nig_posterior_draw(post, rng); };
    seq.log_kernel = [model, y, hyper, taus](const Vec& theta, int t) {
        const Index p1 = theta.size() - 1;
        return monotone_log_kernel(model, y, hyper, theta.head(p1), theta[p1],
                                   taus[static_cast<std::size_t>(t)]);
    };
    return seq;
}

}  // namespace scmc

#endif  // SCMC_MONOTONE_HPP
