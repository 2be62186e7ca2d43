#include <doctest.h>

#include <cmath>

#include "scmc/sequence.hpp"
#include "scmc/stats.hpp"

using namespace scmc;

namespace {

Vec theta1(double v) { return Vec::Constant(1, v); }

std::function<Vec(std::mt19937_64&)> std_normal_sampler() {
    return [](std::mt19937_64& rng) {
        std::normal_distribution<double> normal(0.0, 1.0);
        return Vec::Constant(1, normal(rng));
    };
}

}  // namespace

TEST_CASE("power posterior endpoints") {
    auto log_prior = [](const Vec& t) { return log_normal_pdf(t[0], 0.0, 1.0); };
    auto log_lik = [](const Vec& t) { return log_normal_pdf(1.0, t[0], 1.0); };
    DensitySequence seq =
        power_posterior_sequence(log_prior, log_lik, std_normal_sampler(), {0.0, 0.5, 1.0});

    const Vec th = theta1(0.3);
    CHECK(seq.log_kernel(th, 0) == doctest::Approx(log_prior(th)));
    CHECK(seq.log_kernel(th, 2) == doctest::Approx(log_prior(th) + log_lik(th)));
}

TEST_CASE("power posterior at tau=0.5 doubles the Gaussian observation variance") {
    auto log_prior = [](const Vec& t) { return log_normal_pdf(t[0], 0.0, 1.0); };
    auto log_lik = [](const Vec& t) { return log_normal_pdf(2.0, t[0], 1.0); };
    DensitySequence seq =
        power_posterior_sequence(log_prior, log_lik, std_normal_sampler(), {0.0, 0.5, 1.0});

    // 0.5 * log N(y; theta, 1) = log N(y; theta, 2) + const
    const Vec a = theta1(0.1), b = theta1(1.7);
    const double lhs = seq.log_kernel(a, 1) - seq.log_kernel(b, 1);
    const double rhs = (log_prior(a) + log_normal_pdf(2.0, a[0], 2.0)) -
                       (log_prior(b) + log_normal_pdf(2.0, b[0], 2.0));
    CHECK(lhs == doctest::Approx(rhs));
}

TEST_CASE("power posterior rejects non-monotone temperatures") {
    auto f = [](const Vec&) { return 0.0; };
    CHECK_THROWS_AS(power_posterior_sequence(f, f, std_normal_sampler(), {0.0, 0.7, 0.5, 1.0}),
                    config_error);
    CHECK_THROWS_AS(power_posterior_sequence(f, f, std_normal_sampler(), {0.0, 0.5}),
                    config_error);
}

TEST_CASE("data tempering includes data one datum at a time") {
    const std::vector<double> y{1.0, -0.5, 2.0};
    auto log_prior = [](const Vec& t) { return log_normal_pdf(t[0], 0.0, 1.0); };
    auto per_datum = [y](int i, const Vec& t) {
        return log_normal_pdf(y[static_cast<std::size_t>(i)], t[0], 1.0);
    };
    DensitySequence seq = data_tempering_sequence(log_prior, per_datum, std_normal_sampler(),
                                                  {0, 1, 2, 3}, 3);
    const Vec th = theta1(0.4);
    CHECK(seq.log_kernel(th, 0) == doctest::Approx(log_prior(th)));
    double full = log_prior(th);
    for (int i = 0; i < 3; ++i) full += per_datum(i, th);
    CHECK(seq.log_kernel(th, 3) == doctest::Approx(full));

    // increment from count k to k+1 is the single-datum log likelihood
    CHECK(seq.log_kernel(th, 2) - seq.log_kernel(th, 1) == doctest::Approx(per_datum(1, th)));
}

TEST_CASE("data tempering validates counts") {
    auto lp = [](const Vec&) { return 0.0; };
    auto pd = [](int, const Vec&) { return 0.0; };
    CHECK_THROWS_AS(data_tempering_sequence(lp, pd, std_normal_sampler(), {0, 2, 1, 3}, 3),
                    config_error);
    CHECK_THROWS_AS(data_tempering_sequence(lp, pd, std_normal_sampler(), {0, 4}, 3),
                    config_error);
}
