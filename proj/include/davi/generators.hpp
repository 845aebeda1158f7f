#pragma once

#include "davi/mdp.hpp"
#include "davi/samplers.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <string_view>

namespace davi {

enum class Family { SingleNeedle, SingleMulti, SinglePareto, SingleNormal, Tree, Random };
enum class RewardDistribution { Indicator, Pareto, Normal };

inline std::string_view to_string(Family f) {
    switch (f) {
    case Family::SingleNeedle: return "single-needle";
    case Family::SingleMulti: return "single-multi";
    case Family::SinglePareto: return "single-pareto";
    case Family::SingleNormal: return "single-normal";
    case Family::Tree: return "tree";
    case Family::Random: return "random";
    }
    return "?";
}

inline Family parse_family(std::string_view name) {
    for (auto f : {Family::SingleNeedle, Family::SingleMulti, Family::SinglePareto,
                   Family::SingleNormal, Family::Tree, Family::Random})
        if (name == to_string(f)) return f;
    throw UsageError("unknown MDP family '" + std::string(name) + "'");
}

inline std::string_view to_string(RewardDistribution d) {
    switch (d) {
    case RewardDistribution::Indicator: return "indicator";
    case RewardDistribution::Pareto: return "pareto";
    case RewardDistribution::Normal: return "normal";
    }
    return "?";
}

inline RewardDistribution parse_reward_distribution(std::string_view name) {
    if (name == "indicator") return RewardDistribution::Indicator;
    if (name == "pareto") return RewardDistribution::Pareto;
    if (name == "normal") return RewardDistribution::Normal;
    throw UsageError("unknown reward distribution '" + std::string(name) + "'");
}

/**
 * Parameters for one benchmark family. Defaults are the full-size settings:
 * 10000 actions for single-state MDPs, a depth-2 tree with 50 actions and 2
 * children per action, and a 100-state random MDP with 1000 actions, 10
 * successors and termination probability 0.1.
 */
struct GeneratorSpec {
    Family family = Family::SingleNeedle;
    std::size_t num_actions = 10000;
    std::size_t reward_count = 10; ///< unit rewards for single-multi
    std::size_t depth = 2;
    std::size_t branching = 2;
    std::size_t num_states = 100;
    std::size_t successors = 10;
    double p_term = 0.1;
    RewardDistribution rewards = RewardDistribution::Indicator; ///< tree and random families
    double pareto_shape = 2.5;
    double discount = 1.0;
    std::uint64_t seed = 0;

    RewardDistribution effective_rewards() const {
        switch (family) {
        case Family::SingleNeedle:
        case Family::SingleMulti: return RewardDistribution::Indicator;
        case Family::SinglePareto: return RewardDistribution::Pareto;
        case Family::SingleNormal: return RewardDistribution::Normal;
        default: return rewards;
        }
    }

    void validate() const {
        if (num_actions == 0) throw UsageError("generator: num_actions must be positive");
        if (!(discount >= 0.0 && discount <= 1.0)) throw UsageError("generator: discount must lie in [0,1]");
        if (effective_rewards() == RewardDistribution::Pareto && !(pareto_shape > 1.0))
            throw UsageError("generator: pareto shape must exceed 1");
        switch (family) {
        case Family::SingleMulti:
            if (reward_count == 0 || reward_count > num_actions)
                throw UsageError("generator: reward_count must lie in [1, num_actions]");
            break;
        case Family::Tree:
            if (depth == 0 || branching == 0) throw UsageError("generator: tree depth and branching must be positive");
            break;
        case Family::Random:
            if (num_states == 0 || successors == 0) throw UsageError("generator: random MDP sizes must be positive");
            if (successors > num_states) throw UsageError("generator: successors must not exceed num_states");
            if (!(p_term > 0.0 && p_term <= 1.0)) throw UsageError("generator: p_term must lie in (0,1]");
            break;
        default: break;
        }
    }
};

inline nlohmann::json to_json(const GeneratorSpec& g) {
    return {{"family", to_string(g.family)},   {"num_actions", g.num_actions},
            {"reward_count", g.reward_count},  {"depth", g.depth},
            {"branching", g.branching},        {"num_states", g.num_states},
            {"successors", g.successors},      {"p_term", g.p_term},
            {"rewards", to_string(g.rewards)}, {"pareto_shape", g.pareto_shape},
            {"discount", g.discount},          {"seed", g.seed}};
}

namespace detail {

inline void require_known_keys(const nlohmann::json& j, std::initializer_list<std::string_view> known,
                               std::string_view context) {
    if (!j.is_object()) throw UsageError(std::string(context) + ": expected a JSON object");
    for (const auto& item : j.items())
        if (std::find(known.begin(), known.end(), item.key()) == known.end())
            throw UsageError(std::string(context) + ": unknown key '" + item.key() + "'");
}

} // namespace detail

/// Missing keys keep their defaults; unknown keys are rejected.
inline GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
    detail::require_known_keys(j, {"family", "num_actions", "reward_count", "depth", "branching", "num_states",
                                   "successors", "p_term", "rewards", "pareto_shape", "discount", "seed"},
                               "generator spec");
    try {
        GeneratorSpec g;
        g.family = parse_family(j.at("family").get<std::string>());
        g.num_actions = j.value("num_actions", g.num_actions);
        g.reward_count = j.value("reward_count", g.reward_count);
        g.depth = j.value("depth", g.depth);
        g.branching = j.value("branching", g.branching);
        g.num_states = j.value("num_states", g.num_states);
        g.successors = j.value("successors", g.successors);
        g.p_term = j.value("p_term", g.p_term);
        if (j.contains("rewards")) g.rewards = parse_reward_distribution(j.at("rewards").get<std::string>());
        g.pareto_shape = j.value("pareto_shape", g.pareto_shape);
        g.discount = j.value("discount", g.discount);
        g.seed = j.value("seed", g.seed);
        g.validate();
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("generator spec: ") + e.what());
    }
}

/// Standard Pareto, scale 1: support [1, inf), mean shape / (shape - 1).
inline double draw_pareto(double shape, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return std::pow(1.0 - unit(rng), -1.0 / shape);
}

inline double draw_reward(RewardDistribution dist, double pareto_shape, Rng& rng) {
    switch (dist) {
    case RewardDistribution::Pareto: return draw_pareto(pareto_shape, rng);
    case RewardDistribution::Normal: return std::normal_distribution<double>(0.0, 1.0)(rng);
    case RewardDistribution::Indicator: break;
    }
    throw UsageError("draw_reward: indicator rewards are placed, not drawn");
}

namespace detail {

// k distinct indices from [0, n) via partial Fisher-Yates.
inline std::vector<std::size_t> distinct_sample(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    return pool;
}

inline std::size_t uniform_index(std::size_t n, Rng& rng) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

} // namespace detail

/// One state; every action terminates immediately.
inline Mdp gen_single_state(const GeneratorSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const std::size_t A = spec.num_actions;
    std::vector<double> rewards(A, 0.0);
    switch (spec.family) {
    case Family::SingleNeedle: rewards[detail::uniform_index(A, rng)] = 1.0; break;
    case Family::SingleMulti:
        for (auto a : detail::distinct_sample(A, spec.reward_count, rng)) rewards[a] = 1.0;
        break;
    case Family::SinglePareto:
    case Family::SingleNormal:
        for (auto& r : rewards) r = draw_reward(spec.effective_rewards(), spec.pareto_shape, rng);
        break;
    default: throw UsageError("gen_single_state: not a single-state family");
    }
    return Mdp(1, A, spec.discount, true, std::move(rewards), std::vector<std::vector<Transition>>(A));
}

/// Number of states in a tree with the given shape: sum_k (A*b)^k for k = 0..depth.
inline std::size_t tree_state_count(std::size_t depth, std::size_t actions, std::size_t branching) {
    std::size_t total = 0;
    std::size_t level = 1;
    for (std::size_t k = 0; k <= depth; ++k) {
        total += level;
        level *= actions * branching;
    }
    return total;
}

/**
 * Tree of the given depth. States are numbered level by level; action a of
 * the i-th state on a level leads to `branching` fresh children with equal
 * probability. Leaf actions terminate.
 */
inline Mdp gen_tree(const GeneratorSpec& spec) {
    spec.validate();
    if (spec.family != Family::Tree) throw UsageError("gen_tree: family must be tree");
    Rng rng(spec.seed);
    const std::size_t A = spec.num_actions;
    const std::size_t b = spec.branching;
    const std::size_t S = tree_state_count(spec.depth, A, b);

    std::vector<std::vector<Transition>> transitions(S * A);
    std::size_t level_start = 0;
    std::size_t level_size = 1;
    for (std::size_t k = 0; k < spec.depth; ++k) {
        const std::size_t next_start = level_start + level_size;
        for (std::size_t i = 0; i < level_size; ++i) {
            const StateIndex s = level_start + i;
            for (ActionIndex a = 0; a < A; ++a) {
                auto& list = transitions[s * A + a];
                for (std::size_t j = 0; j < b; ++j)
                    list.push_back({next_start + (i * A + a) * b + j, 1.0 / static_cast<double>(b)});
            }
        }
        level_start = next_start;
        level_size *= A * b;
    }

    std::vector<double> rewards(S * A, 0.0);
    if (spec.effective_rewards() == RewardDistribution::Indicator) {
        const StateIndex leaf = level_start + detail::uniform_index(level_size, rng);
        const ActionIndex a = detail::uniform_index(A, rng);
        rewards[leaf * A + a] = 1.0;
    } else {
        for (auto& r : rewards) r = draw_reward(spec.effective_rewards(), spec.pareto_shape, rng);
    }
    return Mdp(S, A, spec.discount, true, std::move(rewards), std::move(transitions));
}

/// Each (s,a) moves to `successors` distinct uniformly chosen states with
/// probability (1 - p_term) / successors each and terminates otherwise.
inline Mdp gen_random_mdp(const GeneratorSpec& spec) {
    spec.validate();
    if (spec.family != Family::Random) throw UsageError("gen_random_mdp: family must be random");
    Rng rng(spec.seed);
    const std::size_t S = spec.num_states;
    const std::size_t A = spec.num_actions;
    std::vector<std::vector<Transition>> transitions(S * A);
    if (spec.p_term < 1.0) {
        const double p = (1.0 - spec.p_term) / static_cast<double>(spec.successors);
        std::vector<std::size_t> pool(S);
        for (std::size_t i = 0; i < S; ++i) pool[i] = i;
        for (std::size_t k = 0; k < S * A; ++k) {
            auto& list = transitions[k];
            list.reserve(spec.successors);
            for (std::size_t i = 0; i < spec.successors; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, S - 1);
                std::swap(pool[i], pool[pick(rng)]);
                list.push_back({pool[i], p});
            }
        }
    }
    std::vector<double> rewards(S * A, 0.0);
    if (spec.effective_rewards() == RewardDistribution::Indicator) {
        rewards[detail::uniform_index(S * A, rng)] = 1.0;
    } else {
        for (auto& r : rewards) r = draw_reward(spec.effective_rewards(), spec.pareto_shape, rng);
    }
    return Mdp(S, A, spec.discount, true, std::move(rewards), std::move(transitions));
}

inline Mdp generate(const GeneratorSpec& spec) {
    switch (spec.family) {
    case Family::Tree: return gen_tree(spec);
    case Family::Random: return gen_random_mdp(spec);
    default: return gen_single_state(spec);
    }
}

} // namespace davi
