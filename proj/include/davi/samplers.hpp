#pragma once

#include "davi/errors.hpp"
#include "davi/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace davi {

/// Per-run random engine. Deterministic for a given seed within this build.
using Rng = std::mt19937_64;

/**
 * Two independent engines derived from one run seed: one drives state
 * selection, the other action subsets and tie-breaking. Algorithms that
 * share a run seed therefore visit the same state sequence.
 */
struct RngStreams {
    Rng state;
    Rng action;

    explicit RngStreams(std::uint64_t seed)
        : state(seed_for(seed, 0x5eedU)), action(seed_for(seed, 0xac7U)) {}

private:
    static Rng seed_for(std::uint64_t seed, std::uint32_t tag) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          tag};
        return Rng(seq);
    }
};

/// Distribution p over states.
class StateSampler {
public:
    static StateSampler uniform(std::size_t num_states) {
        if (num_states == 0) throw UsageError("StateSampler: need at least one state");
        StateSampler out(std::vector<double>(num_states, 1.0 / static_cast<double>(num_states)));
        out.uniform_ = true;
        return out;
    }

    explicit StateSampler(std::vector<double> probabilities) : probabilities_(std::move(probabilities)) {
        if (probabilities_.empty()) throw UsageError("StateSampler: empty distribution");
        double sum = 0.0;
        cumulative_.reserve(probabilities_.size());
        for (double p : probabilities_) {
            if (!(p >= 0.0) || !std::isfinite(p))
                throw UsageError("StateSampler: probabilities must be non-negative");
            sum += p;
            cumulative_.push_back(sum);
        }
        if (std::abs(sum - 1.0) > kProbabilitySumTolerance)
            throw UsageError("StateSampler: probabilities must sum to 1");
    }

    std::size_t num_states() const noexcept { return probabilities_.size(); }
    bool is_uniform() const noexcept { return uniform_; }
    double probability(StateIndex s) const { return probabilities_.at(s); }
    const std::vector<double>& probabilities() const noexcept { return probabilities_; }

    double min_probability() const {
        return *std::min_element(probabilities_.begin(), probabilities_.end());
    }
    bool all_positive() const { return min_probability() > 0.0; }

    StateIndex sample(Rng& rng) const {
        if (uniform_) {
            std::uniform_int_distribution<StateIndex> pick(0, probabilities_.size() - 1);
            return pick(rng);
        }
        std::uniform_real_distribution<double> unit(0.0, cumulative_.back());
        const double u = unit(rng);
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        auto s = static_cast<StateIndex>(it - cumulative_.begin());
        if (s >= probabilities_.size()) s = probabilities_.size() - 1;
        while (probabilities_[s] == 0.0) --s; // only reachable through rounding at the top end
        return s;
    }

private:
    std::vector<double> probabilities_;
    std::vector<double> cumulative_;
    bool uniform_ = false;
};

enum class SubsetMode { Uniform, Weighted };

/// Reusable buffers for subset sampling; one per run.
struct SubsetScratch {
    std::vector<ActionIndex> permutation;
    std::vector<double> weights;
};

/**
 * Distribution q(.|s) over action subsets of exactly m distinct actions.
 *
 * Uniform mode draws a partial Fisher-Yates shuffle, so every m-subset is
 * equally likely and every action is included with probability m/A.
 * Weighted mode draws m times without replacement, each draw proportional
 * to the remaining weights.
 */
class ActionSubsetSampler {
public:
    static ActionSubsetSampler uniform(std::size_t num_actions, std::size_t m) {
        return ActionSubsetSampler(SubsetMode::Uniform, num_actions, m, {});
    }

    /// `weights` holds either one row shared by all states or one row per state.
    static ActionSubsetSampler weighted(std::size_t num_actions, std::size_t m,
                                        std::vector<std::vector<double>> weights) {
        if (weights.empty()) throw UsageError("ActionSubsetSampler: weighted mode needs weights");
        for (const auto& row : weights) {
            if (row.size() != num_actions)
                throw UsageError("ActionSubsetSampler: weight rows must have A entries");
            std::size_t positive = 0;
            for (double w : row) {
                if (!(w >= 0.0) || !std::isfinite(w))
                    throw UsageError("ActionSubsetSampler: weights must be non-negative");
                if (w > 0.0) ++positive;
            }
            if (positive < m)
                throw UsageError("ActionSubsetSampler: each row needs at least m positive weights");
        }
        return ActionSubsetSampler(SubsetMode::Weighted, num_actions, m, std::move(weights));
    }

    SubsetMode mode() const noexcept { return mode_; }
    std::size_t num_actions() const noexcept { return num_actions_; }
    std::size_t subset_size() const noexcept { return m_; }
    bool covers_all_actions() const noexcept { return m_ == num_actions_; }

    double weight(StateIndex s, ActionIndex a) const {
        if (mode_ == SubsetMode::Uniform) return 1.0;
        const auto& row = weights_.size() == 1 ? weights_.front() : weights_.at(s);
        return row.at(a);
    }

    bool has_per_state_weights() const noexcept { return weights_.size() > 1; }
    std::size_t weight_rows() const noexcept { return weights_.size(); }

    /// Writes m distinct action indices into `out`.
    void sample(StateIndex s, Rng& rng, std::vector<ActionIndex>& out, SubsetScratch& scratch) const {
        out.clear();
        if (mode_ == SubsetMode::Uniform) {
            auto& perm = scratch.permutation;
            if (perm.size() != num_actions_) {
                perm.resize(num_actions_);
                std::iota(perm.begin(), perm.end(), ActionIndex{0});
            }
            // Any starting permutation works: the swapped-in prefix is a
            // uniformly random ordered m-tuple.
            for (std::size_t i = 0; i < m_; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, num_actions_ - 1);
                std::swap(perm[i], perm[pick(rng)]);
                out.push_back(perm[i]);
            }
            return;
        }

        const auto& row = weights_.size() == 1 ? weights_.front() : weights_.at(s);
        auto& w = scratch.weights;
        w.assign(row.begin(), row.end());
        for (std::size_t i = 0; i < m_; ++i) {
            const double total = std::accumulate(w.begin(), w.end(), 0.0);
            std::uniform_real_distribution<double> unit(0.0, total);
            double u = unit(rng);
            ActionIndex chosen = num_actions_;
            for (ActionIndex a = 0; a < num_actions_; ++a) {
                if (w[a] <= 0.0) continue;
                chosen = a;
                if (u < w[a]) break;
                u -= w[a];
            }
            out.push_back(chosen);
            w[chosen] = 0.0;
        }
    }

    std::vector<ActionIndex> sample(StateIndex s, Rng& rng) const {
        std::vector<ActionIndex> out;
        SubsetScratch scratch;
        sample(s, rng, out, scratch);
        return out;
    }

private:
    ActionSubsetSampler(SubsetMode mode, std::size_t num_actions, std::size_t m,
                        std::vector<std::vector<double>> weights)
        : mode_(mode), num_actions_(num_actions), m_(m), weights_(std::move(weights)) {
        if (num_actions_ == 0) throw UsageError("ActionSubsetSampler: need at least one action");
        if (m_ == 0 || m_ > num_actions_)
            throw UsageError("ActionSubsetSampler: subset size m must lie in [1, A]");
    }

    SubsetMode mode_;
    std::size_t num_actions_;
    std::size_t m_;
    std::vector<std::vector<double>> weights_;
};

/// Joint probability that state s is drawn with action a in the subset.
struct JointInclusion {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> tilde_q; // row-major S x A
    double q_min = 0.0;
    double p_min = 0.0;
    bool exact = true;

    double at(StateIndex s, ActionIndex a) const { return tilde_q.at(s * num_actions + a); }
};

/**
 * Computes q~(s,a), q_min and p_min. Uniform subsets give the closed form
 * p(s) * m / A; weighted subsets are estimated from `mc_samples` draws per
 * state. Throws ContractViolation if some pair can never be sampled.
 */
inline JointInclusion joint_inclusion(const StateSampler& states, const ActionSubsetSampler& actions,
                                      const Mdp& mdp, std::size_t mc_samples = 100'000,
                                      std::uint64_t mc_seed = 0) {
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    if (states.num_states() != S) throw UsageError("joint_inclusion: state sampler size != S");
    if (actions.num_actions() != A) throw UsageError("joint_inclusion: action sampler size != A");
    if (actions.has_per_state_weights() && actions.weight_rows() != S)
        throw UsageError("joint_inclusion: weight table needs one row per state");
    if (!states.all_positive())
        throw ContractViolation("joint_inclusion: every state needs p(s) > 0");

    JointInclusion out;
    out.num_states = S;
    out.num_actions = A;
    out.tilde_q.assign(S * A, 0.0);
    out.p_min = states.min_probability();

    if (actions.mode() == SubsetMode::Uniform) {
        const double ratio = static_cast<double>(actions.subset_size()) / static_cast<double>(A);
        for (StateIndex s = 0; s < S; ++s)
            for (ActionIndex a = 0; a < A; ++a) out.tilde_q[s * A + a] = states.probability(s) * ratio;
    } else {
        if (mc_samples == 0) throw UsageError("joint_inclusion: mc_samples must be positive");
        for (ActionIndex a = 0; a < A; ++a)
            for (StateIndex s = 0; s < S; ++s)
                if (actions.weight(s, a) <= 0.0)
                    throw ContractViolation("joint_inclusion: zero-weight action can never be sampled");
        out.exact = false;
        Rng rng(mc_seed);
        std::vector<ActionIndex> subset;
        SubsetScratch scratch;
        std::vector<std::size_t> counts(A);
        const std::size_t distinct_rows = actions.has_per_state_weights() ? S : 1;
        std::vector<std::vector<double>> freq(distinct_rows, std::vector<double>(A));
        for (std::size_t row = 0; row < distinct_rows; ++row) {
            std::fill(counts.begin(), counts.end(), 0);
            for (std::size_t i = 0; i < mc_samples; ++i) {
                actions.sample(row, rng, subset, scratch);
                for (auto a : subset) ++counts[a];
            }
            for (ActionIndex a = 0; a < A; ++a) {
                if (counts[a] == 0)
                    throw ContractViolation("joint_inclusion: an action was never drawn; raise mc_samples");
                freq[row][a] = static_cast<double>(counts[a]) / static_cast<double>(mc_samples);
            }
        }
        for (StateIndex s = 0; s < S; ++s)
            for (ActionIndex a = 0; a < A; ++a)
                out.tilde_q[s * A + a] = states.probability(s) * freq[distinct_rows == 1 ? 0 : s][a];
    }
    out.q_min = *std::min_element(out.tilde_q.begin(), out.tilde_q.end());
    return out;
}

} // namespace davi
