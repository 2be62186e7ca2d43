#include <doctest.h>

#include <cmath>

#include "scmc/monotone.hpp"
#include "scmc/rng.hpp"

using namespace scmc;

TEST_CASE("polynomial design matrices") {
    Vec x(4);
    x << 0.0, 0.5, 0.75, 1.0;
    const PolyModel m = make_poly_model(x, 2);

    CHECK(m.X(1, 0) == 1.0);
    CHECK(m.X(1, 1) == 0.5);
    CHECK(m.X(1, 2) == 0.25);
    CHECK(m.D(1, 0) == 0.0);
    CHECK(m.D(1, 1) == 1.0);
    CHECK(m.D(1, 2) == 1.0);  // 2 * 0.5

    // finite-difference check of the derivative rows
    Vec beta(3);
    beta << 0.3, -1.1, 0.8;
    const double h = 1e-6;
    for (Index i = 0; i < x.size(); ++i) {
        auto f = [&](double xi) {
            return beta[0] + beta[1] * xi + beta[2] * xi * xi;
        };
        const double fd = (f(x[i] + h) - f(x[i] - h)) / (2.0 * h);
        CHECK(m.D.row(i).dot(beta) == doctest::Approx(fd).epsilon(1e-7));
    }

    CHECK_THROWS_AS(make_poly_model(x, 0), config_error);
    CHECK_THROWS_AS(make_poly_model(x, 5), config_error);  // n < p+1
    Vec bad(4);
    bad << -0.1, 0.2, 0.4, 0.9;
    CHECK_THROWS_AS(make_poly_model(bad, 2), config_error);
    Vec dup(4);
    dup << 0.5, 0.5, 0.5, 0.5;
    CHECK_THROWS_AS(make_poly_model(dup, 2), numerical_error);
}

TEST_CASE("toy function values") {
    CHECK(toy_function_value(ToyFunction::f1, 1.0) == doctest::Approx(2.5));
    CHECK(toy_function_value(ToyFunction::f1, 0.0) == doctest::Approx(0.1));
    CHECK(toy_function_value(ToyFunction::f2, 0.0) == doctest::Approx(0.0));
    CHECK(toy_function_value(ToyFunction::f3, 0.5) == doctest::Approx(1.0));
}

TEST_CASE("conjugate posterior consistency and limits") {
    auto rng = rng::substream(42, 0, 0, 0);
    const ToyData d = generate_toy_data(ToyFunction::f2, 40, 0.1, rng);
    const PolyModel m = make_poly_model(d.x, 3);

    SUBCASE("dogmatic prior pins the mean") {
        NIGHyper h = NIGHyper::diffuse(3);
        h.m0 << 1.0, -2.0, 0.5, 0.25;
        h.V0 = 1e-10 * Mat::Identity(4, 4);
        const NIGPosterior post = nig_posterior(m, d.y, h);
        CHECK((post.mn - h.m0).norm() < 1e-5);
    }

    SUBCASE("flat prior approaches least squares") {
        NIGHyper h = NIGHyper::diffuse(3);
        h.V0 = 1e8 * Mat::Identity(4, 4);
        const NIGPosterior post = nig_posterior(m, d.y, h);
        const Vec ls = (m.X.transpose() * m.X).llt().solve(m.X.transpose() * d.y);
        CHECK((post.mn - ls).norm() < 1e-3);
    }

    SUBCASE("posterior draw moments match the closed form") {
        const NIGHyper h = NIGHyper::diffuse(3);
        const NIGPosterior post = nig_posterior(m, d.y, h);
        const int reps = 100000;
        Vec mean = Vec::Zero(5);
        double beta1_sq = 0.0;
        for (int r = 0; r < reps; ++r) {
            const Vec th = nig_posterior_draw(post, rng);
            mean += th;
            beta1_sq += th[1] * th[1];
        }
        mean /= reps;
        beta1_sq /= reps;
        // E[beta] = mn, E[sigma^2] = bn/(an-1), Var[beta_1] = bn/(an-1) Vn_11
        const double e_sigma2 = post.bn / (post.an - 1.0);
        const double var_beta1 = e_sigma2 * post.Vn(1, 1);
        for (Index k = 0; k < 4; ++k) {
            const double se = std::sqrt(e_sigma2 * post.Vn(k, k) / reps);
            CHECK(std::abs(mean[k] - post.mn[k]) < 5.0 * se);
        }
        CHECK(std::abs(mean[4] - e_sigma2) < 6.0 * e_sigma2 / std::sqrt(static_cast<double>(reps)));
        CHECK(beta1_sq - mean[1] * mean[1] == doctest::Approx(var_beta1).epsilon(0.1));
    }
}

TEST_CASE("tau = 0 kernel is the unconstrained kernel shifted by n log(1/2)") {
    auto rng = rng::substream(7, 0, 0, 0);
    const ToyData d = generate_toy_data(ToyFunction::f1, 20, 0.1, rng);
    const PolyModel m = make_poly_model(d.x, 2);
    const NIGHyper h = NIGHyper::diffuse(2);

    Vec beta(3);
    beta << 0.2, 0.9, -0.4;
    const double s2 = 0.03;

    const double k0 = monotone_log_kernel(m, d.y, h, beta, s2, 0.0);

    // unconstrained kernel assembled independently
    const Mat V0_inv = h.V0.inverse();
    const Vec c = beta - h.m0;
    const double lp = -0.5 * c.dot(V0_inv * c) / s2 - 1.5 * std::log(s2) +
                      log_inv_gamma_pdf(s2, h.a0, h.b0);
    const Vec r = d.y - m.X * beta;
    const double ll = -0.5 * 20.0 * (log_2pi + std::log(s2)) - 0.5 * r.squaredNorm() / s2;
    CHECK(k0 == doctest::Approx(lp + ll + 20.0 * std::log(0.5)).epsilon(1e-10));

    CHECK(monotone_log_kernel(m, d.y, h, beta, -1.0, 0.0) == neg_inf);
}

TEST_CASE("posterior bands basics") {
    Vec grid(3);
    grid << 0.0, 0.5, 1.0;
    const PolyModel gm = make_poly_model(grid, 1);

    // two equally weighted draws of a linear function
    Mat draws(2, 3);
    draws << 0.0, 1.0, 0.01,   // f(x) = x
             1.0, 1.0, 0.01;   // f(x) = 1 + x
    Vec lw = Vec::Constant(2, std::log(0.5));
    const PosteriorBands b = posterior_bands(draws, lw, gm.X, 0.9);
    CHECK(b.mean[0] == doctest::Approx(0.5));
    CHECK(b.mean[2] == doctest::Approx(1.5));
    CHECK(b.lower[1] == doctest::Approx(0.5));
    CHECK(b.upper[1] == doctest::Approx(1.5));

    // point mass: band collapses onto the single curve
    Vec lw2(2);
    lw2 << 0.0, neg_inf;
    const PosteriorBands b2 = posterior_bands(draws, lw2, gm.X, 0.9);
    CHECK(b2.mean[1] == doctest::Approx(0.5));
    CHECK(b2.lower[1] == doctest::Approx(0.5));
    CHECK(b2.upper[1] == doctest::Approx(0.5));
}

TEST_CASE("band coverage of exact posterior curves") {
    // around 90% of fresh conjugate draws should land inside a 90% band
    auto rng = rng::substream(99, 0, 0, 0);
    const ToyData d = generate_toy_data(ToyFunction::f3, 30, 0.1, rng);
    const PolyModel m = make_poly_model(d.x, 4);
    const NIGHyper h = NIGHyper::diffuse(4);
    const NIGPosterior post = nig_posterior(m, d.y, h);

    const int n_draws = 5000;
    Mat draws(n_draws, 6);
    for (int i = 0; i < n_draws; ++i) draws.row(i) = nig_posterior_draw(post, rng);
    const Vec lw = Vec::Zero(n_draws);

    Vec grid(9);
    for (int g = 0; g < 9; ++g) grid[g] = 0.1 + 0.1 * g;
    const PolyModel gm = make_poly_model(grid, 4);
    const PosteriorBands b = posterior_bands(draws, lw, gm.X, 0.9);

    int inside = 0, total = 0;
    for (int r = 0; r < 200; ++r) {
        const Vec th = nig_posterior_draw(post, rng);
        const Vec curve = gm.X * th.head(5);
        for (Index g = 0; g < grid.size(); ++g) {
            ++total;
            if (curve[g] >= b.lower[g] && curve[g] <= b.upper[g]) ++inside;
        }
    }
    const double cov = static_cast<double>(inside) / total;
    CHECK(cov > 0.85);
    CHECK(cov < 0.95);
}

TEST_CASE("monotone sequence wiring") {
    auto rng = rng::substream(3, 0, 0, 0);
    const ToyData d = generate_toy_data(ToyFunction::f2, 25, 0.1, rng);
    const PolyModel m = make_poly_model(d.x, 3);
    const NIGHyper h = NIGHyper::diffuse(3);

    const DensitySequence seq = monotone_sequence(m, d.y, h, {0.0, 1.0, 10.0});
    CHECK(seq.num_stages() == 2);
    CHECK(seq.stage_params[2][0] == 10.0);

    // initial sampler draws from the conjugate posterior: mean check
    const NIGPosterior post = nig_posterior(m, d.y, h);
    Vec mean = Vec::Zero(5);
    const int reps = 20000;
    for (int r = 0; r < reps; ++r) mean += seq.sample_initial(rng);
    mean /= reps;
    CHECK((mean.head(4) - post.mn).norm() < 0.15);

    Vec th(5);
    th << 0.1, 1.0, 0.2, 0.1, 0.02;
    CHECK(seq.log_kernel(th, 1) ==
          doctest::Approx(monotone_log_kernel(m, d.y, h, th.head(4), th[4], 1.0)));

    CHECK_THROWS_AS(monotone_sequence(m, d.y, h, {}), config_error);
    CHECK_THROWS_AS(monotone_sequence(m, d.y, h, {0.0, -1.0}), config_error);
}
