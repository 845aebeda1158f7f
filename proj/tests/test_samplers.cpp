#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

using namespace davi;

namespace {

Mdp empty_mdp(std::size_t S, std::size_t A) {
    return Mdp(S, A, 0.5, false, std::vector<double>(S * A, 0.0), std::vector<std::vector<Transition>>(S * A));
}

} // namespace

TEST(StateSampler, UniformFrequencies) {
    const auto sampler = StateSampler::uniform(4);
    Rng rng(1);
    std::vector<std::size_t> counts(4);
    const std::size_t n = 1'000'000;
    for (std::size_t i = 0; i < n; ++i) ++counts[sampler.sample(rng)];
    for (auto c : counts) EXPECT_NEAR(static_cast<double>(c) / n, 0.25, 0.002);
}

TEST(StateSampler, PointMass) {
    const StateSampler sampler({0.0, 0.0, 1.0, 0.0});
    Rng rng(2);
    for (int i = 0; i < 10000; ++i) ASSERT_EQ(sampler.sample(rng), 2u);
    EXPECT_FALSE(sampler.all_positive());
}

TEST(StateSampler, SameSeedSameSequence) {
    const StateSampler sampler({0.1, 0.2, 0.3, 0.4});
    Rng a(77), b(77);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(sampler.sample(a), sampler.sample(b));
}

TEST(StateSampler, RejectsBadDistributions) {
    EXPECT_THROW(StateSampler({0.5, 0.6}), UsageError);
    EXPECT_THROW(StateSampler({-0.5, 1.5}), UsageError);
    EXPECT_THROW(StateSampler(std::vector<double>{}), UsageError);
}

TEST(ActionSubsetSampler, FullSubsetWhenMEqualsA) {
    const auto sampler = ActionSubsetSampler::uniform(7, 7);
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        auto subset = sampler.sample(0, rng);
        std::sort(subset.begin(), subset.end());
        ASSERT_EQ(subset, (std::vector<ActionIndex>{0, 1, 2, 3, 4, 5, 6}));
    }
}

TEST(ActionSubsetSampler, UniformInclusionProbability) {
    const auto sampler = ActionSubsetSampler::uniform(5, 2);
    Rng rng(4);
    std::vector<ActionIndex> subset;
    SubsetScratch scratch;
    std::vector<std::size_t> counts(5);
    const std::size_t n = 1'000'000;
    for (std::size_t i = 0; i < n; ++i) {
        sampler.sample(0, rng, subset, scratch);
        ASSERT_EQ(subset.size(), 2u);
        ASSERT_NE(subset[0], subset[1]);
        for (auto a : subset) ++counts[a];
    }
    for (auto c : counts) EXPECT_NEAR(static_cast<double>(c) / n, 0.4, 0.003);
}

TEST(ActionSubsetSampler, EverySubsetEquallyLikely) {
    const auto sampler = ActionSubsetSampler::uniform(6, 3);
    Rng rng(5);
    std::vector<ActionIndex> subset;
    SubsetScratch scratch;
    std::map<std::vector<ActionIndex>, std::size_t> counts;
    const std::size_t n = 100'000;
    for (std::size_t i = 0; i < n; ++i) {
        sampler.sample(0, rng, subset, scratch);
        auto key = subset;
        std::sort(key.begin(), key.end());
        ++counts[key];
    }
    ASSERT_EQ(counts.size(), 20u);
    for (const auto& [key, c] : counts) EXPECT_NEAR(static_cast<double>(c) / n, 0.05, 0.007);
}

TEST(ActionSubsetSampler, WeightedSingletonFollowsMarginal) {
    const auto sampler = ActionSubsetSampler::weighted(4, 1, {{1.0, 2.0, 3.0, 4.0}});
    Rng rng(6);
    std::vector<std::size_t> counts(4);
    const std::size_t n = 400'000;
    for (std::size_t i = 0; i < n; ++i) ++counts[sampler.sample(0, rng).front()];
    for (std::size_t a = 0; a < 4; ++a) {
        const double p = (a + 1) / 10.0;
        const double sigma = std::sqrt(p * (1 - p) / n);
        EXPECT_NEAR(static_cast<double>(counts[a]) / n, p, 5 * sigma);
    }
}

TEST(ActionSubsetSampler, WeightedSubsetsAreDistinct) {
    const auto sampler = ActionSubsetSampler::weighted(6, 4, {{5.0, 0.1, 1.0, 0.0, 2.0, 3.0}});
    Rng rng(7);
    for (int i = 0; i < 2000; ++i) {
        const auto subset = sampler.sample(0, rng);
        ASSERT_EQ(std::set<ActionIndex>(subset.begin(), subset.end()).size(), 4u);
        ASSERT_EQ(std::count(subset.begin(), subset.end(), ActionIndex{3}), 0);
    }
}

TEST(ActionSubsetSampler, RejectsBadSizes) {
    EXPECT_THROW(ActionSubsetSampler::uniform(5, 6), UsageError);
    EXPECT_THROW(ActionSubsetSampler::uniform(5, 0), UsageError);
    EXPECT_THROW(ActionSubsetSampler::weighted(3, 2, {{1.0, 0.0, 0.0}}), UsageError);
    EXPECT_THROW(ActionSubsetSampler::weighted(3, 1, {{1.0, 1.0}}), UsageError);
}

TEST(JointInclusion, UniformClosedForm) {
    const auto a = joint_inclusion(StateSampler::uniform(1), ActionSubsetSampler::uniform(10000, 100),
                                   empty_mdp(1, 10000));
    EXPECT_EQ(a.q_min, 0.01);
    EXPECT_TRUE(a.exact);

    const auto b = joint_inclusion(StateSampler::uniform(3), ActionSubsetSampler::uniform(4, 4), empty_mdp(3, 4));
    EXPECT_EQ(b.q_min, 1.0 / 3.0);
    EXPECT_EQ(b.q_min, b.p_min);
}

TEST(JointInclusion, ProductFormulaMatchesJointFrequencies) {
    const StateSampler states({0.75, 0.25});
    const auto actions = ActionSubsetSampler::uniform(4, 1);
    const auto inc = joint_inclusion(states, actions, empty_mdp(2, 4));
    EXPECT_DOUBLE_EQ(inc.q_min, 0.0625);

    Rng rng(8);
    std::vector<std::size_t> counts(8);
    const std::size_t n = 1'000'000;
    for (std::size_t i = 0; i < n; ++i) {
        const auto s = states.sample(rng);
        for (auto a : actions.sample(s, rng)) ++counts[s * 4 + a];
    }
    for (std::size_t k = 0; k < 8; ++k) {
        const double p = inc.tilde_q[k];
        EXPECT_NEAR(static_cast<double>(counts[k]) / n, p, 5 * std::sqrt(p * (1 - p) / n));
    }
}

TEST(JointInclusion, UniformMatchesMonteCarloWithinFourSigma) {
    const StateSampler states({0.2, 0.5, 0.3});
    const auto actions = ActionSubsetSampler::uniform(5, 3);
    const auto inc = joint_inclusion(states, actions, empty_mdp(3, 5));
    Rng rng(9);
    std::vector<std::size_t> counts(15);
    const std::size_t n = 500'000;
    for (std::size_t i = 0; i < n; ++i) {
        const auto s = states.sample(rng);
        for (auto a : actions.sample(s, rng)) ++counts[s * 5 + a];
    }
    for (std::size_t k = 0; k < 15; ++k) {
        const double p = inc.tilde_q[k];
        EXPECT_NEAR(static_cast<double>(counts[k]) / n, p, 4 * std::sqrt(p * (1 - p) / n));
    }
}

TEST(JointInclusion, WeightedIsEstimated) {
    const auto actions = ActionSubsetSampler::weighted(4, 2, {{1.0, 1.0, 1.0, 1.0}});
    const auto inc = joint_inclusion(StateSampler::uniform(2), actions, empty_mdp(2, 4), 200'000, 3);
    EXPECT_FALSE(inc.exact);
    // Equal weights reduce to uniform subsets: q~ = 0.5 * 2/4.
    for (double q : inc.tilde_q) EXPECT_NEAR(q, 0.25, 4 * 0.5 * std::sqrt(0.5 * 0.5 / 200'000));
}

TEST(JointInclusion, NonUniformNeverBeatsUniform) {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t S = 3, A = 5, m = 2;
        std::vector<double> p(S);
        double total = 0.0;
        for (auto& x : p) total += (x = unit(rng));
        for (auto& x : p) x /= total;
        p.back() = 1.0 - p[0] - p[1];
        const double uniform_bound = static_cast<double>(m) / (S * A);

        const auto exact = joint_inclusion(StateSampler(p), ActionSubsetSampler::uniform(A, m), empty_mdp(S, A));
        EXPECT_LE(exact.q_min, uniform_bound);

        std::vector<std::vector<double>> w(S, std::vector<double>(A));
        for (auto& row : w)
            for (std::size_t a = 0; a < A; ++a) row[a] = a == 0 ? 4.0 : unit(rng);
        const auto weighted = joint_inclusion(StateSampler::uniform(S), ActionSubsetSampler::weighted(A, m, w),
                                              empty_mdp(S, A), 50'000, trial);
        EXPECT_LE(weighted.q_min, uniform_bound);
    }
}

TEST(JointInclusion, ContractViolations) {
    EXPECT_THROW(joint_inclusion(StateSampler({1.0, 0.0}), ActionSubsetSampler::uniform(2, 1), empty_mdp(2, 2)),
                 ContractViolation);
    EXPECT_THROW(joint_inclusion(StateSampler::uniform(1), ActionSubsetSampler::weighted(3, 1, {{1.0, 0.0, 1.0}}),
                                 empty_mdp(1, 3)),
                 ContractViolation);
    EXPECT_THROW(joint_inclusion(StateSampler::uniform(3), ActionSubsetSampler::uniform(2, 1), empty_mdp(2, 2)),
                 UsageError);
}
