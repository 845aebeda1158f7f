#pragma once

#include "davi/mdp.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace davi {

/// Largest S for which policy evaluation uses a dense direct solve.
inline constexpr std::size_t kDenseSolveMaxStates = 512;
inline constexpr std::uint64_t kDefaultSweepCap = 10'000'000;

namespace detail {

inline void require_evaluable(const Mdp& mdp, double tol) {
    if (!(tol > 0.0)) throw UsageError("tolerance must be positive");
    if (mdp.discount() >= 1.0 && !mdp.episodic())
        throw UsageError("evaluation needs discount < 1 or an episodic MDP");
}

// Solves (I - discount * P_pi) v = r_pi.
inline ValueFunction dense_policy_solve(const Mdp& mdp, std::span<const ActionIndex> pi) {
    const auto S = static_cast<Eigen::Index>(mdp.num_states());
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S);
    Eigen::VectorXd rhs(S);
    for (Eigen::Index s = 0; s < S; ++s) {
        const auto a = pi[static_cast<std::size_t>(s)];
        rhs(s) = mdp.reward(static_cast<StateIndex>(s), a);
        for (const auto& t : mdp.transitions(static_cast<StateIndex>(s), a))
            system(s, static_cast<Eigen::Index>(t.next)) -= mdp.discount() * t.probability;
    }
    const Eigen::VectorXd solution = system.partialPivLu().solve(rhs);
    return ValueFunction(solution.data(), solution.data() + S);
}

} // namespace detail

/// Repeated T_pi sweeps from `start` until ||T_pi v - v|| <= tol.
inline ValueFunction policy_evaluation_iterative(const Mdp& mdp, std::span<const ActionIndex> pi, double tol,
                                                 ValueFunction start,
                                                 std::uint64_t sweep_cap = kDefaultSweepCap) {
    detail::require_evaluable(mdp, tol);
    mdp.check_policy(pi);
    mdp.check_values(start);
    ValueFunction v = std::move(start);
    double residual = std::numeric_limits<double>::infinity();
    for (std::uint64_t sweep = 0; sweep < sweep_cap; ++sweep) {
        ValueFunction next = apply_T_pi(mdp, v, pi);
        residual = sup_distance(next, v);
        // T_pi is non-expansive (P_pi is substochastic), so next is at least as close.
        if (residual <= tol) return sweep == 0 ? v : next;
        v = std::move(next);
    }
    throw ConvergenceError("policy_evaluation: sweep cap reached", residual);
}

/**
 * Value of a fixed policy. Returns v with ||T_pi v - v|| <= tol.
 *
 * Small MDPs (S <= 512) use a direct solve of (I - gamma P_pi) v = r_pi,
 * polished by sweeps if its residual misses tol; larger ones use sweeps
 * from the zero vector, capped at `sweep_cap`.
 */
inline ValueFunction policy_evaluation(const Mdp& mdp, std::span<const ActionIndex> pi, double tol,
                                       std::uint64_t sweep_cap = kDefaultSweepCap) {
    detail::require_evaluable(mdp, tol);
    mdp.check_policy(pi);
    ValueFunction start = mdp.num_states() <= kDenseSolveMaxStates ? detail::dense_policy_solve(mdp, pi)
                                                                   : ValueFunction(mdp.num_states(), 0.0);
    return policy_evaluation_iterative(mdp, pi, tol, std::move(start), sweep_cap);
}

struct OptimalSolution {
    ValueFunction value;
    Policy policy;
};

namespace detail {

// Replaces a converged VI iterate by the value of its greedy policy once that
// policy is stable under one more greedy step.
inline OptimalSolution polish_with_policy_evaluation(const Mdp& mdp, ValueFunction v, double tol) {
    Policy pi = greedy_policy(mdp, v);
    constexpr std::uint64_t polish_sweeps = 100'000;
    for (int round = 0; round < 8; ++round) {
        ValueFunction v_pi;
        try {
            // An improper greedy policy (possible at discount 1) fails to converge here.
            v_pi = mdp.num_states() <= kDenseSolveMaxStates ? policy_evaluation(mdp, pi, tol, polish_sweeps)
                                                            : policy_evaluation_iterative(mdp, pi, tol, v, polish_sweeps);
        } catch (const ConvergenceError&) {
            break;
        }
        Policy next = greedy_policy(mdp, v_pi);
        if (next == pi) return {std::move(v_pi), std::move(pi)};
        pi = std::move(next);
    }
    pi = greedy_policy(mdp, v);
    return {std::move(v), std::move(pi)};
}

} // namespace detail

/**
 * Reference optimal value function and its greedy policy.
 *
 * Acyclic MDPs are solved exactly by backward induction in reverse
 * topological order. Otherwise T is applied from the zero vector until
 * successive iterates differ by at most tol * max(1 - discount, 1e-6), or by
 * a few ulps of ||v|| when that threshold is below working precision. The
 * greedy policy of that iterate is then evaluated exactly and, if it is
 * greedy with respect to its own value, that value is returned.
 */
inline OptimalSolution optimal_value_oracle(const Mdp& mdp, double tol,
                                            std::uint64_t sweep_cap = kDefaultSweepCap) {
    detail::require_evaluable(mdp, tol);

    if (auto order = topological_order(mdp)) {
        OptimalSolution out{ValueFunction(mdp.num_states(), 0.0), Policy(mdp.num_states(), 0)};
        for (auto it = order->rbegin(); it != order->rend(); ++it) {
            const auto b = bellman_backup_unchecked(mdp, out.value, *it);
            out.value[*it] = b.value;
            out.policy[*it] = b.action;
        }
        return out;
    }

    const double threshold = tol * std::max(1.0 - mdp.discount(), 1e-6);
    ValueFunction v(mdp.num_states(), 0.0);
    double change = std::numeric_limits<double>::infinity();
    for (std::uint64_t sweep = 0; sweep < sweep_cap; ++sweep) {
        ValueFunction next = apply_T(mdp, v);
        change = sup_distance(next, v);
        v = std::move(next);
        // Below a few ulps the iterates can cycle instead of settling.
        const double floor = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, sup_norm(v));
        if (change <= std::max(threshold, floor)) return detail::polish_with_policy_evaluation(mdp, std::move(v), tol);
    }
    throw ConvergenceError("optimal_value_oracle: sweep cap reached", change);
}

} // namespace davi
