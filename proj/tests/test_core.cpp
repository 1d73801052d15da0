#include "sit/core.hpp"

#include <gtest/gtest.h>

#include <random>

namespace {

using sit::GroupId;
using sit::GroupSummary;
using sit::PopulationSpec;
using sit::SetParameters;
using sit::TestConfig;

TEST(GroupSummaryType, ValidatesInvariants) {
    EXPECT_NO_THROW(GroupSummary(GroupId::E1, 2, 0.1, 0.0));
    EXPECT_THROW(GroupSummary(GroupId::E1, 1, 0.1, 0.2), std::invalid_argument);
    EXPECT_THROW(GroupSummary(GroupId::C2, 100, 0.1, -0.01), std::invalid_argument);
}

TEST(GroupSummaryType, DefaultWeightsComposeStackedDifference) {
    EXPECT_EQ(GroupSummary(GroupId::E2, 10, 0, 1).weight(), 1.0);
    EXPECT_EQ(GroupSummary(GroupId::C2, 10, 0, 1).weight(), -1.0);
    EXPECT_EQ(GroupSummary(GroupId::E1, 10, 0, 1).weight(), -1.0);
    EXPECT_EQ(GroupSummary(GroupId::C1, 10, 0, 1).weight(), 1.0);
}

TEST(GroupSummaryType, PsiTimesNEqualsVariance) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> var(0.0, 5.0);
    std::uniform_int_distribution<std::int64_t> count(2, 100000);
    for (int i = 0; i < 200; ++i) {
        const auto n = count(rng);
        const double s2 = var(rng);
        GroupSummary g(GroupId::E1, n, 0.0, s2);
        EXPECT_DOUBLE_EQ(g.psi() * static_cast<double>(n), s2);
    }
}

TEST(PopulationSpecType, ValidatesInvariants) {
    SetParameters sets;
    EXPECT_NO_THROW(PopulationSpec(2, 2, 0, sets));
    EXPECT_NO_THROW(PopulationSpec(0, 0, 10, sets));
    // Fewer than 4 qualifiers in total.
    EXPECT_THROW(PopulationSpec(1, 1, 1, sets), std::invalid_argument);
    // Strategy 2 has no audience.
    EXPECT_THROW(PopulationSpec(10, 0, 0, sets), std::invalid_argument);
    EXPECT_THROW(PopulationSpec(-1, 10, 0, sets), std::invalid_argument);

    PopulationSpec pop(100, 200, 50, sets);
    EXPECT_EQ(pop.n_total(), 350);
    EXPECT_EQ(pop.strategy_1_audience(), 150);
    EXPECT_EQ(pop.strategy_2_audience(), 250);
}

TEST(SetParametersType, BernoulliConsistencyEnforced) {
    SetParameters sets;
    sets.set1 = sit::bernoulli_set(0.10, 0.12);
    sets.set2 = sit::bernoulli_set(0.10, 0.15);
    sets.overlap = sit::bernoulli_overlap(0.10, 0.11, 0.14);
    EXPECT_NO_THROW(sit::validate_set_parameters(sets, sit::ResponseMode::bernoulli));

    sets.set2.sigma2_intervention = 0.2;  // != 0.15 * 0.85
    EXPECT_THROW(sit::validate_set_parameters(sets, sit::ResponseMode::bernoulli),
                 std::invalid_argument);
    // The same parameters are fine in gaussian mode.
    EXPECT_NO_THROW(sit::validate_set_parameters(sets, sit::ResponseMode::gaussian));

    sets.set2.sigma2_intervention = -0.1;
    EXPECT_THROW(sit::validate_set_parameters(sets, sit::ResponseMode::gaussian),
                 std::invalid_argument);
}

TEST(TestConfigType, RequiresAlphaBelowPower) {
    EXPECT_NO_THROW(TestConfig(0.05, 0.8));
    EXPECT_THROW(TestConfig(0.9, 0.8), std::invalid_argument);
    EXPECT_THROW(TestConfig(0.8, 0.8), std::invalid_argument);
}

TEST(NetBenefit, DirectProduct) {
    EXPECT_EQ(sit::net_benefit(0.0, 1000), 0.0);
    EXPECT_EQ(sit::net_benefit(0.02, 0), 0.0);
    EXPECT_EQ(sit::net_benefit(0.01, 50000), 500.0);
    EXPECT_THROW(sit::net_benefit(0.01, -1), std::invalid_argument);
}

TEST(NetBenefit, Bilinear) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> real(-2.0, 2.0);
    std::uniform_int_distribution<std::int64_t> count(0, 1000000);
    for (int i = 0; i < 100; ++i) {
        const double x = real(rng);
        const double k = real(rng);
        const auto n = count(rng);
        EXPECT_DOUBLE_EQ(sit::net_benefit(k * x, n), k * sit::net_benefit(x, n));
    }
}

struct FlaggedRecord {
    int id;
    bool qualifies_1;
    bool qualifies_2;
    bool operator==(const FlaggedRecord&) const = default;
};

TEST(PooledControlSplit, FlagProjection) {
    std::vector<FlaggedRecord> merged{{1, true, false}, {2, false, true}, {3, true, true}};
    auto [c1, c2] = sit::pooled_control_split(merged);
    ASSERT_EQ(c1.size(), 2u);
    ASSERT_EQ(c2.size(), 2u);
    EXPECT_EQ(c1[0].id, 1);
    EXPECT_EQ(c1[1].id, 3);
    EXPECT_EQ(c2[0].id, 2);
    EXPECT_EQ(c2[1].id, 3);

    std::vector<FlaggedRecord> single{{1, true, false}};
    auto [c1b, c2b] = sit::pooled_control_split(single);
    EXPECT_EQ(c1b.size(), 1u);
    EXPECT_TRUE(c2b.empty());

    std::vector<FlaggedRecord> bad{{1, false, false}};
    EXPECT_THROW(sit::pooled_control_split(bad), std::invalid_argument);
}

TEST(PooledControlSplit, CountingIdentity) {
    // |C1| + |C2| = |pool| + |both-qualified|, checked by enumeration.
    std::mt19937_64 rng(20240901);
    std::vector<FlaggedRecord> merged;
    int both = 0;
    for (int i = 0; i < 1000; ++i) {
        bool q1 = false, q2 = false;
        switch (rng() % 10) {
            case 0: case 1: case 2: q1 = true; q2 = true; break;  // ~300 dual
            case 3: case 4: case 5: case 6: q1 = true; break;
            default: q2 = true; break;
        }
        if (q1 && q2) ++both;
        merged.push_back({i, q1, q2});
    }
    auto [c1, c2] = sit::pooled_control_split(merged);
    EXPECT_EQ(c1.size() + c2.size(), merged.size() + both);
}

TEST(PooledControlSplit, IdempotentOnOwnFlags) {
    std::mt19937_64 rng(5);
    std::vector<FlaggedRecord> merged;
    for (int i = 0; i < 500; ++i) {
        const bool q1 = rng() % 2 == 0;
        const bool q2 = !q1 || rng() % 3 == 0;
        merged.push_back({i, q1, q2});
    }
    auto [c1, c2] = sit::pooled_control_split(merged);
    auto [c1_again, unused] = sit::pooled_control_split(c1);
    auto [unused2, c2_again] = sit::pooled_control_split(c2);
    EXPECT_EQ(c1_again, c1);
    EXPECT_EQ(c2_again, c2);
}

}  // namespace
