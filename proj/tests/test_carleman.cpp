#include <chemosteer/carleman.hpp>

#include <gtest/gtest.h>

#include <cfloat>
#include <cmath>
#include <random>

using namespace chemosteer;

TEST(SelectParams, OmegaConstraintForcesLambda) {
    const CarlemanParams p = select_params(0.0, 1.0, 1.5, 1.0, 1.0, 0.25);
    const double bound = 4.0 * std::log(2.0);
    EXPECT_GT(p.lambda, bound);
    EXPECT_LT(p.lambda, bound * (1 + 1e-9));
    EXPECT_TRUE(p.lambda_raised);
    EXPECT_LT(p.omega_of_lambda, 0.5);
    EXPECT_TRUE(p.certified());
}

TEST(SelectParams, GammaAndSFloor) {
    const CarlemanParams p = select_params(0.0, 1.0, 1.5, 3.0, 1.0, 0.25);
    EXPECT_EQ(p.lambda, 3.0);
    EXPECT_FALSE(p.lambda_raised);
    EXPECT_NEAR(p.gamma_of_lambda, 4.4816890703380645, 1e-14);
    EXPECT_NEAR(p.s, 2.0 * std::exp(1.5), 1e-13);
    EXPECT_NEAR(p.s, 8.9634, 1e-4);
    EXPECT_TRUE(p.s_raised);
}

TEST(SelectParams, ScalingWithDrift) {
    // lambda = scale (1 + B^2) and s = scale (1 + B^2)(T + T^2) when both exceed the floors.
    const CarlemanParams p = select_params(2.0, 0.5, 1.5, 2.0, 50.0, 0.25);
    EXPECT_DOUBLE_EQ(p.lambda, 10.0);
    EXPECT_DOUBLE_EQ(p.s, 50.0 * 5.0 * 0.75);
    EXPECT_FALSE(p.s_raised);
}

TEST(SelectParams, RandomInputsAlwaysCertified) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const double b = 5.0 * u(rng);
        const double T = 0.05 + 5.0 * u(rng);
        const double d0 = 1.0 + 1e-3 + 0.998 * u(rng);
        const double ls = std::exp(-4 + 6 * u(rng));
        const double ss = std::exp(-4 + 6 * u(rng));
        const double bn = 0.05 + 0.5 * u(rng);
        const CarlemanParams p = select_params(b, T, d0, ls, ss, bn);
        EXPECT_TRUE(p.omega_constraint());
        EXPECT_TRUE(p.s_constraint());
        EXPECT_NEAR(p.omega_of_lambda * std::sqrt(p.gamma_of_lambda), 1.0, 1e-12);
        EXPECT_EQ(p.underflow_warning, d0 * p.s * std::abs(p.alpha0_mid) > 700.0);
    }
}

TEST(SelectParams, Rejections) {
    EXPECT_THROW(select_params(0, 1, 1.0, 1, 1, 0.25), InvalidInput);
    EXPECT_THROW(select_params(0, 1, 2.0, 1, 1, 0.25), InvalidInput);
    EXPECT_THROW(select_params(0, 1, 1.5, 0, 1, 0.25), InvalidInput);
    EXPECT_THROW(select_params(0, 1, 1.5, 1, -1, 0.25), InvalidInput);
    EXPECT_THROW(select_params(0, 0, 1.5, 1, 1, 0.25), InvalidInput);
    EXPECT_THROW(select_params(-1, 1, 1.5, 1, 1, 0.25), InvalidInput);
}

TEST(SelectParams, UnderflowWarning) {
    const CarlemanParams p = select_params(0.0, 1.0, 1.5, 1.0, 100.0, 0.25);
    EXPECT_TRUE(p.underflow_warning);
}

TEST(Weights, ClosedFormAtCriticalPointAndMidHorizon) {
    // N odd puts a centre at 0.5; M odd puts a midpoint at T/2.
    const DomainSpec d(101, {0.3, 0.7}, 0.5);
    const TimeGrid t(2.0, 201);
    const BetaFunction beta(d);
    const CarlemanParams p = select_params(0.0, 2.0, 1.5, 3.0, 1.0, beta.sup_norm());
    const WeightTables w = build_weights(p, beta, d, t);
    ASSERT_DOUBLE_EQ(d.center(50), 0.5);
    ASSERT_DOUBLE_EQ(t.midpoint(101), 1.0);
    const double bs = beta.sup_norm();
    const double expected = 4.0 * (std::exp(p.lambda * bs) - std::exp(2 * p.lambda * bs)) / 4.0;
    EXPECT_NEAR(w.alpha(101, 50), expected, 1e-10 * std::abs(expected));
}

TEST(Weights, StructureProperties) {
    const DomainSpec d(60, {0.3, 0.7}, 0.45);
    const TimeGrid t(1.0, 80);
    const BetaFunction beta(d);
    const CarlemanConfig cfg;
    const CarlemanParams p = select_params(1.0, 1.0, cfg.delta0, cfg.lambda_scale, cfg.s_scale, beta.sup_norm());
    const WeightTables w = build_weights(p, beta, d, t);
    double peak = 0;
    for (std::size_t k = 1; k <= 80; ++k) {
        for (std::size_t i = 0; i < 60; ++i) peak = std::max(peak, w.w(k, i));
    }
    for (std::size_t k = 1; k <= 80; ++k) {
        for (std::size_t i = 0; i < 60; ++i) {
            EXPECT_LT(w.alpha(k, i), 0.0);
            EXPECT_GE(w.w(k, i), 0.0);
            EXPECT_LT(w.w(k, i), 1.0);
            EXPECT_NEAR(w.w(k, i), w.w(81 - k, i), 1e-12 * peak);
        }
    }
    for (std::size_t i = 0; i < 60; ++i) {
        EXPECT_LT(w.w(1, i), w.w(40, i));
        EXPECT_LT(w.w(1, i), 1e-3 * peak);
        EXPECT_LT(w.w(80, i), 1e-3 * peak);
    }
    for (double x : w.w.level(0)) EXPECT_EQ(x, 0.0);
    const WeightChainReport chain = weight_chain_report(w, p, t);
    EXPECT_TRUE(chain.alpha_negative);
    EXPECT_TRUE(chain.chain_holds);
    EXPECT_LT(chain.max_alpha, 0.0);
}

TEST(Weights, FlushRuleIsRelativeToPeak) {
    const DomainSpec d(40, {0.3, 0.7}, 0.5);
    const TimeGrid t(1.0, 100);
    const BetaFunction beta(d);
    const CarlemanParams p = select_params(0.0, 1.0, 1.9, 0.25, 1.0, beta.sup_norm());
    const WeightTables w = build_weights(p, beta, d, t);
    std::size_t zeros = 0;
    for (std::size_t k = 1; k <= 100; ++k) {
        for (std::size_t i = 0; i < 40; ++i) {
            const double e = p.delta0 * p.s * w.alpha(k, i);
            if (e < w.max_exponent + std::log(DBL_EPSILON)) {
                EXPECT_EQ(w.w(k, i), 0.0);
                ++zeros;
            } else {
                EXPECT_EQ(w.w(k, i), std::exp(e));
            }
        }
    }
    EXPECT_EQ(zeros, w.flushed);
    EXPECT_GT(zeros, 0u);
}

TEST(Weights, RandomParametersKeepChain) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const double a = 0.1 + 0.3 * u(rng);
        const double b = a + 0.2 + 0.3 * u(rng);
        const DomainSpec d(30 + trial, {a, b}, a + (b - a) * (0.2 + 0.6 * u(rng)));
        const double T = 0.2 + 3 * u(rng);
        const TimeGrid t(T, 8 + trial);
        const BetaFunction beta(d);
        const CarlemanParams p =
            select_params(3 * u(rng), T, 1.1 + 0.8 * u(rng), 0.1 + 2 * u(rng), 0.1 + 2 * u(rng), beta.sup_norm());
        const WeightTables w = build_weights(p, beta, d, t);
        const WeightChainReport r = weight_chain_report(w, p, t);
        EXPECT_TRUE(r.alpha_negative && r.chain_holds) << trial;
        EXPECT_TRUE(p.certified());
    }
}

TEST(Weights, Rejections) {
    const DomainSpec d(20, {0.3, 0.7}, 0.5);
    const BetaFunction beta(d);
    const CarlemanParams p = select_params(0.0, 1.0, 1.5, 1.0, 1.0, beta.sup_norm());
    EXPECT_THROW(build_weights(p, beta, d, TimeGrid(1.0, 3)), InvalidInput);
    EXPECT_THROW(build_weights(p, beta, d, TimeGrid(2.0, 10)), InvalidInput);
    for (double x : build_weights(p, beta, d, TimeGrid(1.0, 10)).w.data()) EXPECT_TRUE(std::isfinite(x));
}

TEST(Weights, AlphaValueMatchesTable) {
    const DomainSpec d(24, {0.3, 0.7}, 0.4);
    const TimeGrid t(1.5, 12);
    const BetaFunction beta(d);
    const CarlemanParams p = select_params(0.5, 1.5, 1.5, 1.0, 1.0, beta.sup_norm());
    const WeightTables w = build_weights(p, beta, d, t);
    for (std::size_t k = 1; k <= 12; ++k) {
        for (std::size_t i = 0; i < 24; ++i) {
            EXPECT_NEAR(w.alpha(k, i), alpha_value(p, beta.at_centers()[i], t.midpoint(k)),
                        1e-14 * std::abs(w.alpha(k, i)));
            const double tau = t.midpoint(k) * (1.5 - t.midpoint(k));
            EXPECT_NEAR(w.phi(k, i), std::exp(p.lambda * beta.at_centers()[i]) / tau, 1e-13 * w.phi(k, i));
        }
    }
}
