#include <chemosteer/diagnostics.hpp>

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace chemosteer;

TEST(Recursion, Thresholds) {
    EXPECT_DOUBLE_EQ(recursion_threshold({1, 1, 1}), 1.0);
    EXPECT_DOUBLE_EQ(recursion_threshold({1, 2, 1}), 0.5);
    EXPECT_DOUBLE_EQ(recursion_threshold({2, 1, 1}), 0.5);
    // c = 4, b = 2, eps = 0.5: 4^{-2} 2^{-4}
    EXPECT_NEAR(recursion_threshold({4, 2, 0.5}), 1.0 / 256.0, 1e-16);
}

TEST(Recursion, HandRows) {
    const RecursionRun a = recursion_simulate({2, 1, 1}, 0.4, 200);
    ASSERT_GE(a.sequence.size(), 3u);
    EXPECT_NEAR(a.sequence[1], 0.32, 1e-15);
    EXPECT_NEAR(a.sequence[2], 0.2048, 1e-15);
    EXPECT_EQ(a.verdict, RecursionVerdict::Decays);

    const RecursionRun b = recursion_simulate({1, 2, 1}, 0.9, 200);
    ASSERT_GE(b.sequence.size(), 3u);
    EXPECT_NEAR(b.sequence[1], 0.81, 1e-15);
    EXPECT_NEAR(b.sequence[2], 1.3122, 1e-14);
    EXPECT_EQ(b.verdict, RecursionVerdict::Diverges);
    EXPECT_EQ(to_string(b.verdict), "diverges");
}

TEST(Recursion, MatchesDirectIteration) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const RecursionSpec s{0.5 + 2 * u(rng), 1 + u(rng), 0.2 + u(rng)};
        const double y0 = recursion_threshold(s) * (0.5 + u(rng));
        const RecursionRun r = recursion_simulate(s, y0, 6);
        const auto ref = oracle::recursion(s.c, s.b, s.eps, y0, static_cast<int>(r.sequence.size()) - 1);
        for (std::size_t k = 0; k < r.sequence.size() && std::isfinite(r.sequence[k]); ++k) {
            EXPECT_LE(oracle::rel(r.sequence[k], ref[k]), 1e-12) << trial << " " << k;
        }
    }
}

TEST(Recursion, ZeroStart) {
    const RecursionRun r = recursion_simulate({3, 2, 1}, 0.0, 10);
    EXPECT_EQ(r.verdict, RecursionVerdict::Decays);
    ASSERT_EQ(r.sequence.size(), 11u);
    for (double y : r.sequence) EXPECT_EQ(y, 0.0);
}

TEST(Recursion, RandomSpecsRespectThreshold) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const RecursionSpec s{1.0 + 4 * u(rng), 1.01 + 3 * u(rng), 0.1 + 2.9 * u(rng)};
        const double thr = recursion_threshold(s);
        ASSERT_GT(thr, 0.0);
        EXPECT_EQ(recursion_simulate(s, thr, 1000000).verdict, RecursionVerdict::Decays) << trial;
        EXPECT_EQ(recursion_simulate(s, 0.99 * thr, 1000000).verdict, RecursionVerdict::Decays) << trial;
        EXPECT_EQ(recursion_simulate(s, 2 * thr, 1000000).verdict, RecursionVerdict::Diverges) << trial;
    }
}

TEST(Recursion, Rejections) {
    EXPECT_THROW(recursion_threshold({0, 1, 1}), InvalidInput);
    EXPECT_THROW(recursion_threshold({1, 1, 0}), InvalidInput);
    EXPECT_THROW(recursion_threshold({1, 0.5, 1}), InvalidInput);
    EXPECT_THROW(recursion_simulate({1, 1, 1}, -1.0, 5), InvalidInput);
}

namespace {

struct Probe {
    DomainSpec domain{40, {0.3, 0.7}, 0.5};
    TimeGrid time{1.0, 40};
    BetaFunction beta{domain};
    DriftField drift = DriftField::zero(domain, time);
    CarlemanParams params;
    WeightTables weights;

    explicit Probe(double drift_amp = 0.0, std::uint64_t seed = 0) {
        if (drift_amp > 0.0) {
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> u(-drift_amp, drift_amp);
            for (std::size_t k = 0; k < time.n_levels(); ++k) {
                for (std::size_t j = 1; j < domain.n_cells(); ++j) drift.set_interior(k, j, u(rng));
            }
        }
        const CarlemanConfig c;
        params = select_params(drift.sup_norm(), 1.0, c.delta0, c.lambda_scale, c.s_scale, beta.sup_norm());
        weights = build_weights(params, beta, domain, time);
    }
};

}  // namespace

TEST(Observability, ConstantModeClosedForm) {
    const Probe p;
    const std::vector<double> ones(40, 1.0);
    const double numeric = observability_ratio(ones, p.drift, p.weights, p.domain, p.time);
    // Independent sum over the tables.
    double s = 0;
    for (std::size_t k = 1; k <= 40; ++k) {
        for (std::size_t i = 0; i < 40; ++i) {
            if (p.domain.in_omega(i)) s += p.weights.w(k, i);
        }
    }
    const double closed = 1.0 / (p.time.dt() * p.domain.h() * s);
    EXPECT_LE(oracle::rel(numeric, closed), 1e-10);
    EXPECT_LE(oracle::rel(constant_mode_ratio(p.weights, p.domain, p.time), closed), 1e-13);
}

TEST(Observability, SeededDeterminismAndNesting) {
    const Probe p(1.0, 3);
    ObservabilityOptions opt;
    opt.seed = 42;
    opt.n_samples = 8;
    const ObservabilityReport a = observability_probe(p.drift, p.weights, p.domain, p.time, opt);
    const ObservabilityReport b = observability_probe(p.drift, p.weights, p.domain, p.time, opt);
    EXPECT_EQ(a.ratios, b.ratios);
    EXPECT_EQ(a.max_ratio, b.max_ratio);
    double prev = 0;
    for (std::size_t n : {1u, 2u, 4u, 8u, 16u}) {
        opt.n_samples = n;
        const ObservabilityReport r = observability_probe(p.drift, p.weights, p.domain, p.time, opt);
        EXPECT_GE(r.max_ratio, prev);
        prev = r.max_ratio;
        for (std::size_t j = 0; j < std::min<std::size_t>(n, 8); ++j) EXPECT_EQ(r.ratios[j], a.ratios[j]);
        for (double x : r.ratios) {
            EXPECT_TRUE(std::isfinite(x));
            EXPECT_GT(x, 0.0);
        }
        EXPECT_NEAR(r.c_hat, std::log(r.max_ratio) / r.kappa, 1e-14 * std::abs(r.c_hat));
    }
}

TEST(Observability, RandomDataAreUnitNorm) {
    const DomainSpec d(30, {0.3, 0.7}, 0.5);
    for (std::size_t j = 0; j < 20; ++j) {
        const auto x = random_terminal_datum(7, j, d);
        EXPECT_NEAR(norm_omega(x, d.h()), 1.0, 1e-14);
    }
    EXPECT_NE(random_terminal_datum(7, 0, d), random_terminal_datum(7, 1, d));
    EXPECT_NE(random_terminal_datum(7, 0, d), random_terminal_datum(8, 0, d));
}

TEST(Observability, RefinementNeverLowersTheBest) {
    const Probe p;
    ObservabilityOptions opt;
    opt.n_samples = 6;
    opt.refine_iters = 3;
    const ObservabilityReport r = observability_probe(p.drift, p.weights, p.domain, p.time, opt);
    EXPECT_GE(r.refined_ratio, r.max_ratio);
    EXPECT_GE(r.max_ratio, r.q90_ratio);
    EXPECT_GE(r.q90_ratio, r.median_ratio);
}

TEST(Observability, RejectsZeroSamples) {
    const Probe p;
    ObservabilityOptions opt;
    opt.n_samples = 0;
    EXPECT_THROW(observability_probe(p.drift, p.weights, p.domain, p.time, opt), InvalidInput);
}

TEST(Observability, AdversarialDatumStaysFinite) {
    // Datum concentrated next to the boundary, away from the control region.
    const Probe p;
    std::vector<double> x(40, 0.0);
    x[0] = 1.0 / std::sqrt(p.domain.h());
    const double r = observability_ratio(x, p.drift, p.weights, p.domain, p.time);
    EXPECT_GT(r, 0.0);
    EXPECT_TRUE(std::isfinite(r));
}

TEST(Constants, HandValues) {
    EXPECT_DOUBLE_EQ(rho0_constant(1.0, 2.0), 6.0);
    EXPECT_DOUBLE_EQ(kappa_constant(1.0, 2.0), 6.5);
}
