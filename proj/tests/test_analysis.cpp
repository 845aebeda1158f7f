#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace davi;
using davi::testing::make_random_mdp;
using davi::testing::make_tiny2;

// Reference values below were evaluated independently with 50-digit
// arithmetic (mpmath) from the closed forms.

TEST(Horizon, Examples) {
    EXPECT_NEAR(horizon(0.9, 0.1, 10.0), 46.0517018598809, 1e-10);
    EXPECT_NEAR(horizon(0.0, 1.0 / std::exp(1.0), 1.0), 1.0, 1e-15);
    EXPECT_NEAR(horizon(0.5, 0.02, 2.0), 9.21034037197618, 1e-10);
}

TEST(Horizon, DistanceFromOracle) {
    const auto mdp = make_tiny2();
    const auto oracle = optimal_value_oracle(mdp, 1e-13);
    EXPECT_NEAR(horizon(0.5, 0.02, sup_norm(oracle.value)), 9.21034037197618, 1e-9);
}

TEST(Horizon, RejectsBadInputs) {
    EXPECT_THROW(horizon(0.9, 10.0, 10.0), UsageError);
    EXPECT_THROW(horizon(0.9, 0.0, 10.0), UsageError);
    EXPECT_THROW(horizon(1.0, 0.1, 10.0), UsageError);
    EXPECT_THROW(horizon(0.9, 0.1, -1.0), UsageError);
    EXPECT_DOUBLE_EQ(default_distance_bound(0.9, 2.0), 12.0);
}

TEST(IterationBound, Examples) {
    EXPECT_EQ(iteration_bound(2, 4, 0.25, 0.1), 32u);
    EXPECT_EQ(iteration_bound(1, 1, 0.99, 0.5), 1u);
    EXPECT_EQ(iteration_bound(1, 1, uniform_q_min(1, 10000, 100), 0.05), 299u);
    EXPECT_EQ(iteration_bound(3, 2, 0.25, 0.05), 51u);
}

TEST(IterationBound, Monotonicity) {
    const std::vector<double> qs{0.01, 0.05, 0.2, 0.5, 0.9};
    const std::vector<double> deltas{0.01, 0.05, 0.2, 0.6};
    for (std::uint64_t l = 1; l <= 5; ++l)
        for (std::uint64_t S = 1; S <= 64; S *= 2)
            for (double q : qs)
                for (double d : deltas) {
                    const auto n = iteration_bound(l, S, q, d);
                    EXPECT_LE(n, iteration_bound(l + 1, S, q, d));
                    EXPECT_LE(n, iteration_bound(l, S * 2, q, d));
                    EXPECT_GE(n, iteration_bound(l, S, q * 1.05, d));
                    EXPECT_GE(n, iteration_bound(l, S, q, d * 1.5));
                }
}

TEST(IterationBound, RejectsOutOfRange) {
    EXPECT_THROW(iteration_bound(0, 1, 0.5, 0.1), UsageError);
    EXPECT_THROW(iteration_bound(1, 0, 0.5, 0.1), UsageError);
    EXPECT_THROW(iteration_bound(1, 1, 0.0, 0.1), UsageError);
    EXPECT_THROW(iteration_bound(1, 1, 1.0, 0.1), UsageError);
    EXPECT_THROW(iteration_bound(1, 1, 0.5, 1.0), UsageError);
    EXPECT_THROW(iteration_bound(1, 1, 0.5, 0.0), UsageError);
}

TEST(UniformQMin, Formula) {
    EXPECT_EQ(uniform_q_min(1, 10000, 100), 0.01);
    EXPECT_EQ(uniform_q_min(4, 2, 2), 0.25);
    EXPECT_THROW(uniform_q_min(4, 2, 3), UsageError);
}

TEST(Tau, Examples) {
    const auto t = tau_for_epsilon(0.9, 0.1, 10.0, 4, 0.25, 0.1, 3);
    EXPECT_NEAR(t.horizon, 46.0517018598809, 1e-10);
    EXPECT_NEAR(t.tau, 1203.57294735385, 1e-8);
    EXPECT_NEAR(t.cost_magnitude, 3.0 * 4.0 * t.tau, 1e-9 * t.cost_magnitude);
}

TEST(Tau, CollapsesToHorizon) {
    // S = 1 and delta = H (1 - q) make ln(S H / delta) = ln(1 / (1 - q)).
    const double q = 0.999;
    const double H = horizon(0.5, 0.5, 1.0);
    const auto t = tau_for_epsilon(0.5, 0.5, 1.0, 1, q, H * (1.0 - q));
    EXPECT_NEAR(t.tau, H, 1e-12);
}

TEST(ComplexityTable, ViRowExample) {
    const auto t = complexity_table(0.9, 0.1, 10.0, 100, 1000, 10, 1e-4, 0.01, 0.1);
    ASSERT_TRUE(t.vi.has_value());
    EXPECT_NEAR(*t.vi, 7.49554194388e8, 1.0);
}

TEST(ComplexityTable, DaviMatchesAviAtFullSubsets) {
    for (std::size_t S : {1u, 4u, 50u}) {
        const std::size_t A = 20;
        const double q = uniform_q_min(S, A, A);
        const double p = 1.0 / static_cast<double>(S);
        if (q >= 1.0) continue;
        const auto t = complexity_table(0.9, 0.1, 10.0, S, A, A, q, p, 0.05);
        EXPECT_EQ(t.davi, t.avi);
    }
}

TEST(ComplexityTable, DaviRowIsMTimesSTimesTau) {
    const auto t = complexity_table(0.9, 0.1, 10.0, 4, 8, 2, 0.25, 0.25, 0.1);
    const auto tau = tau_for_epsilon(0.9, 0.1, 10.0, 4, 0.25, 0.1, 2);
    EXPECT_NEAR(t.davi, 2.0 * 4.0 * tau.tau, 1e-9 * t.davi);
}

TEST(ComplexityTable, ZeroDiscountViRowUndefined) {
    const auto t = complexity_table(0.0, 0.1, 1.0, 4, 8, 2, 0.0625, 0.25, 0.1);
    EXPECT_FALSE(t.vi.has_value());
    EXPECT_FALSE(t.vi_note.empty());
    EXPECT_GT(t.davi, 0.0);
}

TEST(ComplexityTable, DeltaOneLimitIsContinuous) {
    const auto at_one = complexity_table(0.9, 0.1, 10.0, 4, 8, 2, 0.0625, 0.25, 1.0);
    const auto near_one = complexity_table(0.9, 0.1, 10.0, 4, 8, 2, 0.0625, 0.25, 1.0 - 1e-9);
    EXPECT_TRUE(std::isfinite(at_one.davi));
    EXPECT_NEAR(near_one.davi, at_one.davi, 1e-6 * at_one.davi);
    EXPECT_NEAR(near_one.avi, at_one.avi, 1e-6 * at_one.avi);
}

TEST(BoundReport, DefaultsAndEcho) {
    BoundInputs in;
    in.gamma = 0.9;
    in.eps = 0.1;
    in.delta = 0.1;
    in.num_states = 4;
    in.num_actions = 1;
    in.m = 1;
    in.l = 2;
    in.dist = 10.0;
    const auto r = bound_report(in);
    EXPECT_EQ(r.n_iterations, 32u);
    EXPECT_EQ(r.q_min, 0.25);
    EXPECT_EQ(r.p_min, 0.25);
    EXPECT_NEAR(r.horizon, 46.0517018598809, 1e-10);
    EXPECT_GT(r.tau, 0.0);
    EXPECT_GT(r.cost_magnitude, 0.0);
    const auto j = to_json(r);
    EXPECT_EQ(j["n_iterations"], 32);
    EXPECT_EQ(j["inputs"]["S"], 4);

    in.l.reset();
    in.dist.reset();
    const auto d = bound_report(in);
    EXPECT_DOUBLE_EQ(d.dist, 10.0);
    // 0.9^l * 10 <= 0.1 first holds at l = 44.
    EXPECT_EQ(d.l, 44u);
    EXPECT_LE(std::pow(0.9, 44) * 10.0, 0.1);
    EXPECT_GT(std::pow(0.9, 43) * 10.0, 0.1);
}

TEST(ValueGap, Tiny2) {
    const auto mdp = make_tiny2();
    const ValueFunction v_star{1.0, 2.0};
    const auto gap = value_gap(mdp, v_star);
    // Brute force: best minus every other look-ahead.
    for (StateIndex s = 0; s < 2; ++s) {
        const double l0 = lookahead(mdp, v_star, s, 0), l1 = lookahead(mdp, v_star, s, 1);
        ASSERT_TRUE(gap.per_state[s].has_value());
        EXPECT_DOUBLE_EQ(*gap.per_state[s], std::abs(l0 - l1));
    }
    EXPECT_DOUBLE_EQ(*gap.per_state[0], 0.5);
    EXPECT_DOUBLE_EQ(*gap.per_state[1], 1.5);
    EXPECT_DOUBLE_EQ(*gap.global, 0.5);
    EXPECT_DOUBLE_EQ(*gap.capture_radius, 0.5);
}

TEST(ValueGap, TotalTieIsUndefined) {
    const Mdp mdp(2, 3, 0.9, false, std::vector<double>(6, 0.3),
                  {{{1, 1.0}}, {{1, 1.0}}, {{1, 1.0}}, {{0, 1.0}}, {{0, 1.0}}, {{0, 1.0}}});
    const auto oracle = optimal_value_oracle(mdp, 1e-12);
    const auto gap = value_gap(mdp, oracle.value);
    EXPECT_FALSE(gap.global.has_value());
    EXPECT_FALSE(gap.per_state[0].has_value());
    EXPECT_THROW(check_optimal_via_gap(mdp, oracle.policy, oracle), ContractViolation);
}

TEST(ValueGap, NeedleIsOne) {
    GeneratorSpec spec;
    spec.family = Family::SingleNeedle;
    spec.num_actions = 500;
    spec.seed = 9;
    const auto mdp = generate(spec);
    const auto oracle = optimal_value_oracle(mdp, 1e-12);
    EXPECT_EQ(*value_gap(mdp, oracle.value).global, 1.0);
}

TEST(ValueGap, ZeroDiscountRadiusIsInfinite) {
    const Mdp mdp(1, 2, 0.0, false, {0.0, 1.0}, {{}, {}});
    const auto gap = value_gap(mdp, ValueFunction{1.0});
    EXPECT_TRUE(std::isinf(*gap.capture_radius));
    EXPECT_FALSE(gap.note.empty());
}

TEST(EpsilonOptimal, Tiny2) {
    const auto mdp = make_tiny2();
    EXPECT_TRUE(check_epsilon_optimal(mdp, Policy{1, 0}, 0.0).epsilon_optimal);
    const auto bad = check_epsilon_optimal(mdp, Policy{0, 0}, 0.5);
    EXPECT_FALSE(bad.epsilon_optimal);
    EXPECT_NEAR(bad.policy_value[0], 0.0, 1e-12);
    EXPECT_NEAR(bad.policy_value[1], 2.0, 1e-12);
    EXPECT_EQ(bad.worst_state, 0u);
    EXPECT_NEAR(bad.worst_shortfall, 1.0, 1e-12);
    // Non-strict boundary.
    EXPECT_TRUE(check_epsilon_optimal(mdp, Policy{0, 0}, 1.0).epsilon_optimal);
    EXPECT_FALSE(check_epsilon_optimal(mdp, Policy{0, 0}, 0.999).epsilon_optimal);
    EXPECT_THROW(check_epsilon_optimal(mdp, Policy{0, 0}, -1.0), UsageError);
}

TEST(EpsilonOptimal, OraclePolicyAlwaysPasses) {
    for (int seed = 0; seed < 10; ++seed) {
        const auto mdp = make_random_mdp(12, 4, 3, 0.9, 300 + seed);
        const auto oracle = optimal_value_oracle(mdp, 1e-12);
        EXPECT_TRUE(check_epsilon_optimal(mdp, oracle.policy, 0.0, oracle).epsilon_optimal);
    }
}

TEST(OptimalViaGap, Tiny2) {
    const auto mdp = make_tiny2();
    EXPECT_TRUE(check_optimal_via_gap(mdp, Policy{1, 0}));
    EXPECT_FALSE(check_optimal_via_gap(mdp, Policy{0, 0}));
}

TEST(OptimalViaGap, DaviRunInsideCaptureRadius) {
    const auto mdp = make_tiny2();
    const ValueFunction v_star{1.0, 2.0};
    RunConfig rc;
    rc.algorithm = Algorithm::DAVI;
    rc.action_sampler = ActionSubsetSampler::uniform(2, 1);
    rc.budget = Budget::iterations(200);
    rc.seed = 11;
    std::optional<ValueFunction> captured;
    run(mdp, rc, [&](const SolverState& st) {
        if (!captured && sup_distance(v_star, st.v) < 0.5) captured = st.v;
    });
    ASSERT_TRUE(captured.has_value());
    EXPECT_TRUE(check_optimal_via_gap(mdp, greedy_policy(mdp, *captured)));
}
