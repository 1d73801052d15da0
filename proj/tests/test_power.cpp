#include "sit/power.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"

namespace {

using sit::PlanningGroup;
using sit::TestConfig;

std::vector<PlanningGroup> four_groups(std::int64_t n, double s2) {
    return std::vector<PlanningGroup>(4, PlanningGroup{s2, n, 1.0});
}

TEST(Power, VanishingEffectGivesAlpha) {
    const TestConfig cfg(0.05, 0.8);
    const auto groups = four_groups(1000, 0.25);
    EXPECT_NEAR(sit::power(1e-12, cfg, groups).value(), 0.05, 1e-6);
    EXPECT_THROW(sit::power(0.0, cfg, groups), std::invalid_argument);
    EXPECT_THROW(sit::power(-0.1, cfg, groups), std::invalid_argument);
}

TEST(Power, SaturatesForHugeEffect) {
    const TestConfig cfg(0.05, 0.8);
    const auto groups = four_groups(1000, 0.25);
    const double pooled_se = std::sqrt(4 * 0.25 / 1000.0);
    EXPECT_GE(sit::power(100.0 * pooled_se, cfg, groups).value(), 0.9999);
}

TEST(Power, MatchesMonteCarloOracle) {
    // Frozen reference: oracle::mc_stacked_power with n=1000, s2=0.25,
    // theta=0.05, alpha=0.05, 1e5 replicates, seed 987654321 -> 0.474360.
    const double frozen_mc = 0.474360;
    const TestConfig cfg(0.05, 0.8);
    const auto groups = four_groups(1000, 0.25);
    const double analytic = sit::power(0.05, cfg, groups).value();
    EXPECT_NEAR(analytic, frozen_mc, 0.01);
    EXPECT_NEAR(analytic, 0.475, 0.002);

    // Cheap live rerun of the same oracle at lower precision.
    oracle::McPowerSetup setup{1000, 0.25, 0.05, 0.05, 5000, 424242ULL};
    EXPECT_NEAR(analytic, oracle::mc_stacked_power(setup), 0.025);
}

TEST(Power, MonotoneInEffectSizeAndSamples) {
    const TestConfig cfg(0.05, 0.8);
    const auto groups = four_groups(500, 0.25);
    double prev = 0.0;
    for (double theta : {0.01, 0.03, 0.05, 0.08, 0.12}) {
        const double p = sit::power(theta, cfg, groups).value();
        EXPECT_GT(p, prev);
        prev = p;
    }
    EXPECT_GT(sit::power(0.05, cfg, four_groups(1000, 0.25)).value(),
              sit::power(0.05, cfg, four_groups(500, 0.25)).value());
    EXPECT_GT(sit::power(0.05, cfg, four_groups(500, 0.16)).value(),
              sit::power(0.05, cfg, four_groups(500, 0.25)).value());
}

TEST(Power, ZeroVarianceIsCertainDetection) {
    const TestConfig cfg(0.05, 0.8);
    EXPECT_EQ(sit::power(0.01, cfg, four_groups(100, 0.0)).value(), 1.0);
}

TEST(MinDetectableEffect, MatchesQuantileGapFormula) {
    const TestConfig cfg(0.05, 0.8);
    const auto groups = four_groups(1000, 0.25);
    const double mde = sit::min_detectable_effect(cfg, groups);
    // Normal-quantile approximation 2.4865 * sqrt(0.001) with a small
    // t-distribution correction on top.
    EXPECT_NEAR(mde, 2.4865 * std::sqrt(0.001), 2e-4);
    EXPECT_NEAR(mde, 0.0786, 2e-4);
}

TEST(MinDetectableEffect, PowerRoundTrip) {
    std::mt19937_64 rng(1618);
    std::uniform_real_distribution<double> var(0.01, 2.0);
    std::uniform_int_distribution<std::int64_t> count(10, 50000);
    std::uniform_real_distribution<double> alpha(0.005, 0.2);
    std::uniform_real_distribution<double> target(0.5, 0.99);

    for (int trial = 0; trial < 100; ++trial) {
        const double a = alpha(rng);
        const double pi = std::max(target(rng), a + 0.05);
        const TestConfig cfg(a, pi);
        std::vector<PlanningGroup> groups;
        const int k = 2 + static_cast<int>(rng() % 5);
        for (int i = 0; i < k; ++i) groups.push_back({var(rng), count(rng), 1.0});

        const double mde = sit::min_detectable_effect(cfg, groups);
        EXPECT_NEAR(sit::power(mde, cfg, groups).value(), pi, 1e-9)
            << "alpha=" << a << " pi=" << pi;
    }
}

TEST(MinDetectableEffect, DoublingSamplesShrinksBySqrt2) {
    const TestConfig cfg(0.05, 0.8);
    const double mde_n = sit::min_detectable_effect(cfg, four_groups(4000, 0.25));
    const double mde_2n = sit::min_detectable_effect(cfg, four_groups(8000, 0.25));
    EXPECT_NEAR(mde_2n, mde_n / std::sqrt(2.0), 1e-3 * mde_n);
}

TEST(MinDetectableEffect, ZeroVarianceGivesZero) {
    const TestConfig cfg(0.05, 0.8);
    EXPECT_EQ(sit::min_detectable_effect(cfg, four_groups(100, 0.0)), 0.0);
}

TEST(MinSampleEqual, FourQuarterVarianceGroups) {
    const TestConfig cfg(0.05, 0.8);
    const std::vector<double> variances(4, 0.25);
    const auto n = sit::min_sample_equal(0.1, cfg, variances);
    // Normal approximation gives 618.3; the t iteration may add a couple.
    EXPECT_GE(n, 618);
    EXPECT_LE(n, 621);

    // Self-consistency: smallest n meeting the target.
    const std::vector<PlanningGroup> at_n(4, PlanningGroup{0.25, n, 1.0});
    const std::vector<PlanningGroup> below(4, PlanningGroup{0.25, n - 1, 1.0});
    EXPECT_GE(sit::power(0.1, cfg, at_n).value(), 0.8);
    EXPECT_LT(sit::power(0.1, cfg, below).value(), 0.8);
}

TEST(MinSampleEqual, QuadraticInInverseTheta) {
    const TestConfig cfg(0.05, 0.8);
    const std::vector<double> variances(4, 0.25);
    const auto n1 = sit::min_sample_equal(0.1, cfg, variances);
    const auto n2 = sit::min_sample_equal(0.05, cfg, variances);
    EXPECT_NEAR(static_cast<double>(n2) / static_cast<double>(n1), 4.0, 0.02);
}

TEST(MinSampleEqual, DegenerateCases) {
    const TestConfig cfg(0.05, 0.8);
    const std::vector<double> zero{0.0};
    EXPECT_EQ(sit::min_sample_equal(0.1, cfg, zero), 2);
    EXPECT_THROW(sit::min_sample_equal(0.0, cfg, zero), std::invalid_argument);
    EXPECT_THROW(sit::min_sample_equal(-1.0, cfg, zero), std::invalid_argument);
    EXPECT_THROW(sit::min_sample_equal(0.1, cfg, {}), std::invalid_argument);
}

TEST(MinSampleRatio, UnitRatioReducesToEqual) {
    const TestConfig cfg(0.05, 0.8);
    const std::vector<double> all(4, 0.25);
    const std::vector<double> controls{0.25, 0.25};
    const std::vector<double> exposed{0.25, 0.25};
    const auto equal_n = sit::min_sample_equal(0.1, cfg, all);
    const auto plan = sit::min_sample_ratio(0.1, cfg, controls, exposed, 1.0, 1.0);
    EXPECT_EQ(plan.n_control, equal_n);
    EXPECT_EQ(plan.n_exposed, equal_n);
}

TEST(MinSampleRatio, HandEvaluatedBoundFactor) {
    // Two controls and two exposed at s2 = 0.25, exposed 3x the controls:
    // bound factor = 0.5 + (1/3) * 0.5 = 0.66667, normal seed 412.2.
    const TestConfig cfg(0.05, 0.8);
    const std::vector<double> controls{0.25, 0.25};
    const std::vector<double> exposed{0.25, 0.25};
    const auto plan = sit::min_sample_ratio(0.1, cfg, controls, exposed, 1.0, 3.0);
    EXPECT_GE(plan.n_control, 412);
    EXPECT_LE(plan.n_control, 415);
    EXPECT_EQ(plan.n_exposed, 3 * plan.n_control);

    // Power round trip at the returned plan and just below it.
    std::vector<PlanningGroup> at_plan{{0.25, plan.n_control, 1.0},
                                       {0.25, plan.n_control, 1.0},
                                       {0.25, plan.n_exposed, 1.0},
                                       {0.25, plan.n_exposed, 1.0}};
    EXPECT_GE(sit::power(0.1, cfg, at_plan).value(), 0.8);
    std::vector<PlanningGroup> below{{0.25, plan.n_control - 1, 1.0},
                                     {0.25, plan.n_control - 1, 1.0},
                                     {0.25, 3 * (plan.n_control - 1), 1.0},
                                     {0.25, 3 * (plan.n_control - 1), 1.0}};
    EXPECT_LT(sit::power(0.1, cfg, below).value(), 0.8);
}

TEST(MinSampleRatio, DirectionOfRatioEffects) {
    const TestConfig cfg(0.05, 0.8);
    const std::vector<double> all(4, 0.25);
    const std::vector<double> controls{0.25, 0.25};
    const std::vector<double> exposed{0.25, 0.25};
    const auto equal_n = sit::min_sample_equal(0.1, cfg, all);

    // Exposed groups 4x the controls: fewer controls suffice, at the cost
    // of much larger exposed groups and a larger total.
    const auto wide = sit::min_sample_ratio(0.1, cfg, controls, exposed, 1.0, 4.0);
    EXPECT_LT(wide.n_control, equal_n);
    EXPECT_GT(wide.n_exposed, equal_n);
    EXPECT_GT(2 * wide.n_control + 2 * wide.n_exposed, 4 * equal_n);

    // Exposed groups a quarter of the controls: now the controls must
    // exceed the equal-split size.
    const auto narrow = sit::min_sample_ratio(0.1, cfg, controls, exposed, 4.0, 1.0);
    EXPECT_GT(narrow.n_control, equal_n);
    EXPECT_LT(narrow.n_exposed, equal_n);
    EXPECT_THROW(sit::min_sample_ratio(0.1, cfg, controls, exposed, 0.0, 1.0),
                 std::invalid_argument);
}

TEST(PlanningWeights, WeightEqualsScaledVariance) {
    // Supplying weight k must equal replacing s2 with k^2 s2 end to end.
    const TestConfig cfg(0.05, 0.8);
    std::vector<PlanningGroup> weighted{{0.25, 800, 1.0},
                                        {0.25, 800, -1.0},
                                        {0.16, 600, 2.0},
                                        {0.16, 600, -2.0}};
    std::vector<PlanningGroup> scaled{{0.25, 800, 1.0},
                                      {0.25, 800, 1.0},
                                      {4.0 * 0.16, 600, 1.0},
                                      {4.0 * 0.16, 600, 1.0}};
    EXPECT_DOUBLE_EQ(sit::power(0.08, cfg, weighted).value(),
                     sit::power(0.08, cfg, scaled).value());
    EXPECT_DOUBLE_EQ(sit::min_detectable_effect(cfg, weighted),
                     sit::min_detectable_effect(cfg, scaled));
}

TEST(Power, TwoSidedUsesHalvedAlpha) {
    const TestConfig one(0.05, 0.8, sit::Sidedness::one_sided_greater);
    const TestConfig two(0.05, 0.8, sit::Sidedness::two_sided);
    const auto groups = four_groups(1000, 0.25);
    EXPECT_LT(sit::power(0.05, two, groups).value(),
              sit::power(0.05, one, groups).value());
    const TestConfig one_halved(0.025, 0.8);
    EXPECT_DOUBLE_EQ(sit::power(0.05, two, groups).value(),
                     sit::power(0.05, one_halved, groups).value());
}

}  // namespace
