#include <doctest.h>

#include <cmath>
#include <map>

#include "scmc/particles.hpp"
#include "scmc/rng.hpp"

using namespace scmc;

namespace {

Vec log_of(std::initializer_list<double> w) {
    Vec v(static_cast<Index>(w.size()));
    Index i = 0;
    for (double x : w) v[i++] = x > 0.0 ? std::log(x) : neg_inf;
    return v;
}

ParticleEnsemble scalar_ensemble(std::initializer_list<double> values,
                                 std::initializer_list<double> weights) {
    ParticleEnsemble e;
    e.particles.resize(static_cast<Index>(values.size()), 1);
    Index i = 0;
    for (double v : values) e.particles(i++, 0) = v;
    e.log_weights = log_of(weights);
    return e;
}

}  // namespace

TEST_CASE("ess identities") {
    Vec uniform = Vec::Constant(100, std::log(0.01));
    CHECK(ess(uniform) == doctest::Approx(100.0));

    CHECK(ess(log_of({1, 0, 0, 0})) == doctest::Approx(1.0));
    CHECK(ess(log_of({0.5, 0.5, 0, 0})) == doctest::Approx(2.0));
}

TEST_CASE("ess rejects degenerate inputs") {
    Vec all_zero = Vec::Constant(3, neg_inf);
    CHECK_THROWS_AS(ess(all_zero), degenerate_error);
    Vec with_nan = log_of({0.5, 0.5});
    with_nan[0] = std::nan("");
    CHECK_THROWS_AS(ess(with_nan), degenerate_error);
}

TEST_CASE("normalize log weights") {
    Vec two = normalize_log_weights(log_of({1, 1}));
    CHECK(std::exp(two[0]) == doctest::Approx(0.5));

    // constant shift invariance
    Vec four = normalize_log_weights(log_of({2, 2, 2, 2}));
    CHECK(std::exp(four[2]) == doctest::Approx(0.25));

    Vec killed = normalize_log_weights(log_of({1, 0}));
    CHECK(std::exp(killed[0]) == doctest::Approx(1.0));
    CHECK(killed[1] == neg_inf);

    CHECK_THROWS_AS(normalize_log_weights(Vec::Constant(2, neg_inf)), degenerate_error);
}

TEST_CASE("normalized weights sum to one within 1e-12") {
    auto rng = rng::substream(7, 0, 0);
    std::uniform_real_distribution<double> u(-30.0, 5.0);
    Vec lw(200);
    for (Index i = 0; i < lw.size(); ++i) lw[i] = u(rng);
    const Vec norm = normalize_log_weights(lw);
    double s = 0.0;
    for (Index i = 0; i < norm.size(); ++i) s += std::exp(norm[i]);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ess is scale free") {
    auto rng = rng::substream(11, 0, 0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec lw(50);
    for (Index i = 0; i < lw.size(); ++i) lw[i] = std::log(u(rng) + 1e-3);
    const double e1 = ess(normalize_log_weights(lw));
    const double e2 = ess(normalize_log_weights(Vec(lw.array() + std::log(37.0))));
    CHECK(e1 == doctest::Approx(e2));
}

TEST_CASE("resampling a point mass copies one particle") {
    ParticleEnsemble e = scalar_ensemble({1.0, 2.0, 3.0, 4.0}, {0, 0, 1, 0});
    auto rng = rng::substream(1, 0, 0);
    for (ResampleMethod m : {ResampleMethod::multinomial, ResampleMethod::systematic}) {
        ParticleEnsemble out = resample(e, m, rng);
        for (Index i = 0; i < out.size(); ++i) CHECK(out.particles(i, 0) == 3.0);
        CHECK(std::exp(out.log_weights[0]) == doctest::Approx(0.25));
    }
}

TEST_CASE("systematic resampling with uniform weights is a permutation") {
    ParticleEnsemble e;
    e.particles.resize(64, 1);
    for (Index i = 0; i < 64; ++i) e.particles(i, 0) = static_cast<double>(i);
    e.log_weights = Vec::Constant(64, -std::log(64.0));
    auto rng = rng::substream(3, 0, 0);
    ParticleEnsemble out = resample(e, ResampleMethod::systematic, rng);
    std::map<double, int> counts;
    for (Index i = 0; i < 64; ++i) counts[out.particles(i, 0)]++;
    CHECK(counts.size() == 64);
    for (const auto& [v, c] : counts) CHECK(c == 1);
}

TEST_CASE("multinomial copy count matches the binomial moment oracle") {
    ParticleEnsemble e = scalar_ensemble({1.0, 2.0}, {0.75, 0.25});
    const int n = 10000;
    ParticleEnsemble big;
    big.particles.resize(n, 1);
    big.log_weights.resize(n);
    // expand to n slots with the same two-point weight profile
    for (Index i = 0; i < n; ++i) {
        big.particles(i, 0) = (i % 2 == 0) ? 1.0 : 2.0;
        big.log_weights[i] = std::log((i % 2 == 0) ? 0.75 : 0.25) - std::log(n / 2.0);
    }
    auto rng = rng::substream(5, 0, 0);
    ParticleEnsemble out = resample(big, ResampleMethod::multinomial, rng);
    int count1 = 0;
    for (Index i = 0; i < n; ++i)
        if (out.particles(i, 0) == 1.0) ++count1;
    const double sigma = std::sqrt(n * 0.75 * 0.25);
    CHECK(std::abs(count1 - 7500.0) < 3.0 * sigma);
}

TEST_CASE("resampling preserves the particle set") {
    ParticleEnsemble e = scalar_ensemble({1.5, -2.0, 0.25, 9.0}, {0.1, 0.2, 0.3, 0.4});
    auto rng = rng::substream(9, 0, 0);
    for (ResampleMethod m : {ResampleMethod::multinomial, ResampleMethod::systematic}) {
        ParticleEnsemble out = resample(e, m, rng);
        for (Index i = 0; i < out.size(); ++i) {
            bool found = false;
            for (Index j = 0; j < e.size(); ++j)
                if (out.particles(i, 0) == e.particles(j, 0)) found = true;
            CHECK(found);
        }
    }
}

TEST_CASE("resampling unbiasedness: chi-square over 1000 repetitions") {
    const Vec probs = (Vec(4) << 0.4, 0.3, 0.2, 0.1).finished();
    ParticleEnsemble e = scalar_ensemble({0, 1, 2, 3}, {0.4, 0.3, 0.2, 0.1});
    const int reps = 1000;

    for (ResampleMethod m : {ResampleMethod::multinomial, ResampleMethod::systematic}) {
        Eigen::Vector4d totals = Eigen::Vector4d::Zero();
        for (int rep = 0; rep < reps; ++rep) {
            auto rng = rng::substream(100 + rep, m == ResampleMethod::multinomial ? 0 : 1, 0);
            ParticleEnsemble out = resample(e, m, rng);
            for (Index i = 0; i < out.size(); ++i)
                totals[static_cast<int>(out.particles(i, 0))] += 1.0;
        }
        // mean copy count within 4 standard errors of N * W_j
        const double n = 4.0;
        for (int j = 0; j < 4; ++j) {
            const double expected = n * probs[j];
            const double se = std::sqrt(n * probs[j] * (1.0 - probs[j]) / reps);
            CHECK(std::abs(totals[j] / reps - expected) < 4.0 * se);
        }
        // chi-square goodness of fit on total copy counts, p > 0.001
        double chi2 = 0.0;
        for (int j = 0; j < 4; ++j) {
            const double expected = reps * n * probs[j];
            chi2 += (totals[j] - expected) * (totals[j] - expected) / expected;
        }
        CHECK(chi2 < 16.27);  // chi-square(3) 0.999 quantile
    }
}

TEST_CASE("aux payloads travel with their particle") {
    ParticleEnsemble e = scalar_ensemble({1.0, 2.0}, {0.0, 1.0});
    e.aux.resize(2);
    e.aux[0] = Mat::Constant(1, 1, 10.0);
    e.aux[1] = Mat::Constant(1, 1, 20.0);
    auto rng = rng::substream(2, 0, 0);
    ParticleEnsemble out = resample(e, ResampleMethod::systematic, rng);
    for (Index i = 0; i < out.size(); ++i) {
        CHECK(out.particles(i, 0) == 2.0);
        CHECK(out.aux[static_cast<std::size_t>(i)](0, 0) == 20.0);
    }
}
