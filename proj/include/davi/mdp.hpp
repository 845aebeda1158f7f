#pragma once

#include "davi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace davi {

using StateIndex = std::size_t;
using ActionIndex = std::size_t;

/// Dense value vector, one entry per state.
using ValueFunction = std::vector<double>;

/// Deterministic Markov policy, one action index per state.
using Policy = std::vector<ActionIndex>;

/// Tolerance on the per-(s,a) probability sum.
inline constexpr double kProbabilitySumTolerance = 1e-12;

struct Transition {
    StateIndex next = 0;
    double probability = 0.0;

    friend bool operator==(const Transition&, const Transition&) = default;
};

/**
 * Finite MDP with a uniform action count per state.
 *
 * Transitions are stored as a sparse successor list per (s,a). Any mass
 * missing from a list is the probability of terminating, after which the
 * process collects nothing further. Immutable once constructed.
 */
class Mdp {
public:
    /**
     * @param rewards row-major S x A table, r(s,a) at rewards[s*A + a]
     * @param transitions one successor list per (s,a), same indexing as rewards
     *
     * Throws UsageError if any structural invariant fails.
     */
    Mdp(std::size_t num_states, std::size_t num_actions, double discount, bool episodic,
        std::vector<double> rewards, std::vector<std::vector<Transition>> transitions)
        : num_states_(num_states), num_actions_(num_actions), discount_(discount),
          episodic_(episodic), rewards_(std::move(rewards)) {
        if (num_states_ == 0 || num_actions_ == 0)
            throw UsageError("Mdp: need at least one state and one action");
        if (!(discount_ >= 0.0 && discount_ <= 1.0))
            throw UsageError("Mdp: discount must lie in [0,1]");
        if (discount_ >= 1.0 && !episodic_)
            throw UsageError("Mdp: discount 1 requires an episodic MDP");
        const std::size_t pairs = num_states_ * num_actions_;
        if (rewards_.size() != pairs)
            throw UsageError("Mdp: reward table must have S*A entries");
        if (transitions.size() != pairs)
            throw UsageError("Mdp: transition table must have S*A lists");

        bounded01_ = true;
        for (double r : rewards_) {
            if (!std::isfinite(r)) throw UsageError("Mdp: rewards must be finite");
            if (r < 0.0 || r > 1.0) bounded01_ = false;
        }

        offsets_.reserve(pairs + 1);
        offsets_.push_back(0);
        std::size_t total = 0;
        for (const auto& list : transitions) total += list.size();
        successors_.reserve(total);

        std::vector<StateIndex> seen;
        for (std::size_t k = 0; k < pairs; ++k) {
            const auto& list = transitions[k];
            double sum = 0.0;
            seen.clear();
            for (const auto& t : list) {
                if (t.next >= num_states_)
                    throw UsageError(describe(k) + ": successor index out of range");
                if (!(t.probability > 0.0) || !std::isfinite(t.probability))
                    throw UsageError(describe(k) + ": transition probabilities must be positive");
                sum += t.probability;
                seen.push_back(t.next);
            }
            if (sum > 1.0 + kProbabilitySumTolerance)
                throw UsageError(describe(k) + ": probabilities sum above 1");
            std::sort(seen.begin(), seen.end());
            if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
                throw UsageError(describe(k) + ": duplicate successor");
            successors_.insert(successors_.end(), list.begin(), list.end());
            offsets_.push_back(successors_.size());
        }
    }

    std::size_t num_states() const noexcept { return num_states_; }
    std::size_t num_actions() const noexcept { return num_actions_; }
    double discount() const noexcept { return discount_; }
    bool episodic() const noexcept { return episodic_; }
    bool bounded01() const noexcept { return bounded01_; }

    double reward(StateIndex s, ActionIndex a) const { return rewards_[s * num_actions_ + a]; }

    std::span<const Transition> transitions(StateIndex s, ActionIndex a) const {
        const std::size_t k = s * num_actions_ + a;
        return {successors_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
    }

    std::span<const double> rewards() const noexcept { return rewards_; }

    /// 1 - sum of listed probabilities for (s,a).
    double termination_probability(StateIndex s, ActionIndex a) const {
        double sum = 0.0;
        for (const auto& t : transitions(s, a)) sum += t.probability;
        return std::max(0.0, 1.0 - sum);
    }

    void check_state(StateIndex s) const {
        if (s >= num_states_) throw UsageError("state index out of range");
    }
    void check_action(ActionIndex a) const {
        if (a >= num_actions_) throw UsageError("action index out of range");
    }
    void check_values(std::span<const double> v) const {
        if (v.size() != num_states_) throw UsageError("value function length must equal S");
    }
    void check_policy(std::span<const ActionIndex> pi) const {
        if (pi.size() != num_states_) throw UsageError("policy length must equal S");
        for (auto a : pi) check_action(a);
    }

private:
    std::string describe(std::size_t k) const {
        return "Mdp: (s=" + std::to_string(k / num_actions_) + ", a=" +
               std::to_string(k % num_actions_) + ")";
    }

    std::size_t num_states_;
    std::size_t num_actions_;
    double discount_;
    bool episodic_;
    bool bounded01_ = true;
    std::vector<double> rewards_;
    std::vector<std::size_t> offsets_;
    std::vector<Transition> successors_;
};

// ---------------------------------------------------------------------------
// Look-ahead values and Bellman back-ups
// ---------------------------------------------------------------------------

/// r(s,a) + discount * sum_{s'} p(s'|s,a) v(s'), without range checks.
inline double lookahead_unchecked(const Mdp& mdp, std::span<const double> v, StateIndex s,
                                  ActionIndex a) {
    double expected = 0.0;
    for (const auto& t : mdp.transitions(s, a)) expected += t.probability * v[t.next];
    return mdp.reward(s, a) + mdp.discount() * expected;
}

inline double lookahead(const Mdp& mdp, std::span<const double> v, StateIndex s, ActionIndex a) {
    mdp.check_values(v);
    mdp.check_state(s);
    mdp.check_action(a);
    return lookahead_unchecked(mdp, v, s, a);
}

struct Backup {
    double value;
    ActionIndex action;
};

/// Max over all actions; ties go to the lowest action index.
inline Backup bellman_backup_unchecked(const Mdp& mdp, std::span<const double> v, StateIndex s) {
    Backup best{lookahead_unchecked(mdp, v, s, 0), 0};
    for (ActionIndex a = 1; a < mdp.num_actions(); ++a) {
        const double q = lookahead_unchecked(mdp, v, s, a);
        if (q > best.value) best = {q, a};
    }
    return best;
}

inline Backup bellman_backup(const Mdp& mdp, std::span<const double> v, StateIndex s) {
    mdp.check_values(v);
    mdp.check_state(s);
    return bellman_backup_unchecked(mdp, v, s);
}

/// Synchronous optimality operator: every entry reads the input v.
inline ValueFunction apply_T(const Mdp& mdp, std::span<const double> v) {
    mdp.check_values(v);
    ValueFunction out(mdp.num_states());
    for (StateIndex s = 0; s < mdp.num_states(); ++s)
        out[s] = bellman_backup_unchecked(mdp, v, s).value;
    return out;
}

inline ValueFunction apply_T_pi(const Mdp& mdp, std::span<const double> v,
                                std::span<const ActionIndex> pi) {
    mdp.check_values(v);
    mdp.check_policy(pi);
    ValueFunction out(mdp.num_states());
    for (StateIndex s = 0; s < mdp.num_states(); ++s)
        out[s] = lookahead_unchecked(mdp, v, s, pi[s]);
    return out;
}

inline Policy greedy_policy(const Mdp& mdp, std::span<const double> v) {
    mdp.check_values(v);
    Policy pi(mdp.num_states());
    for (StateIndex s = 0; s < mdp.num_states(); ++s)
        pi[s] = bellman_backup_unchecked(mdp, v, s).action;
    return pi;
}

inline double sup_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double sup_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw UsageError("sup_distance: length mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/**
 * Topological order of the state graph induced by all successor lists, or
 * nullopt if the graph has a cycle (self-loops included).
 */
inline std::optional<std::vector<StateIndex>> topological_order(const Mdp& mdp) {
    const std::size_t S = mdp.num_states();
    std::vector<std::size_t> indegree(S, 0);
    for (StateIndex s = 0; s < S; ++s)
        for (ActionIndex a = 0; a < mdp.num_actions(); ++a)
            for (const auto& t : mdp.transitions(s, a)) ++indegree[t.next];

    std::vector<StateIndex> order;
    order.reserve(S);
    for (StateIndex s = 0; s < S; ++s)
        if (indegree[s] == 0) order.push_back(s);
    for (std::size_t head = 0; head < order.size(); ++head) {
        const StateIndex s = order[head];
        for (ActionIndex a = 0; a < mdp.num_actions(); ++a)
            for (const auto& t : mdp.transitions(s, a))
                if (--indegree[t.next] == 0) order.push_back(t.next);
    }
    if (order.size() != S) return std::nullopt;
    return order;
}

} // namespace davi
