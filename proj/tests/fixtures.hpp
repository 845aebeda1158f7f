#pragma once

#include "davi/davi.hpp"

#include <random>
#include <vector>

namespace davi::testing {

/**
 * Two-state deterministic MDP, discount 0.5:
 *   s0: a0 -> s0 (r 0), a1 -> s1 (r 0)
 *   s1: a0 -> s1 (r 1), a1 -> s0 (r 0)
 * v* = (1, 2), pi* = (1, 0).
 */
inline Mdp make_tiny2() {
    return Mdp(2, 2, 0.5, false, {0.0, 0.0, 1.0, 0.0},
               {{{0, 1.0}}, {{1, 1.0}}, {{1, 1.0}}, {{0, 1.0}}});
}

/// Dense-ish random MDP: rewards uniform in [0,1], `support` distinct
/// successors per (s,a) with random weights and random termination mass.
inline Mdp make_random_mdp(std::size_t S, std::size_t A, std::size_t support, double gamma,
                           std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> rewards(S * A);
    for (auto& r : rewards) r = unit(rng);
    std::vector<std::vector<Transition>> transitions(S * A);
    std::vector<std::size_t> pool(S);
    for (std::size_t k = 0; k < S * A; ++k) {
        for (std::size_t i = 0; i < S; ++i) pool[i] = i;
        std::shuffle(pool.begin(), pool.end(), rng);
        const double mass = 0.5 + 0.5 * unit(rng);
        std::vector<double> w(support);
        double total = 0.0;
        for (auto& x : w) total += (x = 0.1 + unit(rng));
        for (std::size_t i = 0; i < support; ++i)
            transitions[k].push_back({pool[i], mass * w[i] / total});
    }
    return Mdp(S, A, gamma, gamma >= 1.0, std::move(rewards), std::move(transitions));
}

inline GeneratorSpec shrunken_random_spec(std::uint64_t seed, std::size_t S = 10, std::size_t A = 5,
                                          std::size_t successors = 3) {
    GeneratorSpec g;
    g.family = Family::Random;
    g.num_states = S;
    g.num_actions = A;
    g.successors = successors;
    g.p_term = 0.1;
    g.seed = seed;
    return g;
}

/// Same structure as shrunken_random_spec but with discount 0.9 and
/// rewards redrawn uniformly in [0,1], so bounded01 holds with a non-trivial
/// reward landscape.
inline Mdp with_discount_and_uniform_rewards(const Mdp& base, double gamma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> rewards(base.num_states() * base.num_actions());
    for (auto& r : rewards) r = unit(rng);
    std::vector<std::vector<Transition>> transitions;
    for (StateIndex s = 0; s < base.num_states(); ++s)
        for (ActionIndex a = 0; a < base.num_actions(); ++a) {
            auto t = base.transitions(s, a);
            transitions.emplace_back(t.begin(), t.end());
        }
    return Mdp(base.num_states(), base.num_actions(), gamma, base.episodic(), std::move(rewards),
               std::move(transitions));
}

} // namespace davi::testing
