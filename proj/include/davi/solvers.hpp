#pragma once

#include "davi/mdp.hpp"
#include "davi/samplers.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

namespace davi {

enum class Algorithm { VI, AVI, DAVI };

inline std::string_view to_string(Algorithm algo) {
    switch (algo) {
    case Algorithm::VI: return "vi";
    case Algorithm::AVI: return "avi";
    case Algorithm::DAVI: return "davi";
    }
    return "?";
}

inline Algorithm parse_algorithm(std::string_view name) {
    if (name == "vi") return Algorithm::VI;
    if (name == "avi") return Algorithm::AVI;
    if (name == "davi") return Algorithm::DAVI;
    throw UsageError("unknown algorithm '" + std::string(name) + "' (expected vi|avi|davi)");
}

/// How look-ahead evaluations are charged.
enum class CostModel {
    LookaheadCount,    ///< 1 unit per look-ahead
    SuccessorWeighted, ///< 1 + |successor list| units per look-ahead
};

inline std::string_view to_string(CostModel model) {
    return model == CostModel::LookaheadCount ? "lookahead" : "successor";
}

inline CostModel parse_cost_model(std::string_view name) {
    if (name == "lookahead") return CostModel::LookaheadCount;
    if (name == "successor") return CostModel::SuccessorWeighted;
    throw UsageError("unknown cost model '" + std::string(name) + "' (expected lookahead|successor)");
}

inline std::uint64_t lookahead_cost(const Mdp& mdp, CostModel model, StateIndex s, ActionIndex a) {
    if (model == CostModel::LookaheadCount) return 1;
    return 1 + mdp.transitions(s, a).size();
}

struct SolverState {
    ValueFunction v;
    std::optional<Policy> pi; // maintained by DAVI only
    std::uint64_t iteration = 0;
    std::uint64_t cost = 0;
};

/**
 * Starting point for a solver run:
 *   zero              v_0 = 0
 *   constant_negative v_0 = -c for c > 0
 *   explicit_values   (v_0, pi_0) with v_0(s) <= L^{v_0}(s, pi_0(s)) for all s
 * The first two start DAVI from pi_0 = action 0 everywhere.
 */
class InitSpec {
public:
    enum class Mode { Zero, ConstantNegative, Explicit };

    static InitSpec zero() { return InitSpec(Mode::Zero, 0.0, {}, {}); }

    static InitSpec constant_negative(double c) {
        if (!(c > 0.0) || !std::isfinite(c))
            throw UsageError("InitSpec: constant-negative init needs c > 0");
        return InitSpec(Mode::ConstantNegative, c, {}, {});
    }

    static InitSpec explicit_values(ValueFunction v, Policy pi) {
        return InitSpec(Mode::Explicit, 0.0, std::move(v), std::move(pi));
    }

    Mode mode() const noexcept { return mode_; }
    double constant() const noexcept { return c_; }

    /// Throws UsageError if the explicit pair is malformed or violates v_0 <= T_{pi_0} v_0.
    void validate(const Mdp& mdp) const {
        if (mode_ != Mode::Explicit) return;
        mdp.check_values(v_);
        mdp.check_policy(pi_);
        for (StateIndex s = 0; s < mdp.num_states(); ++s) {
            if (!std::isfinite(v_[s])) throw UsageError("InitSpec: initial values must be finite");
            if (v_[s] > lookahead_unchecked(mdp, v_, s, pi_[s]))
                throw UsageError("InitSpec: v_0(s) exceeds L^{v_0}(s, pi_0(s)) at state " +
                                 std::to_string(s));
        }
    }

    SolverState initial_state(const Mdp& mdp, Algorithm algo) const {
        validate(mdp);
        SolverState state;
        switch (mode_) {
        case Mode::Zero: state.v.assign(mdp.num_states(), 0.0); break;
        case Mode::ConstantNegative: state.v.assign(mdp.num_states(), -c_); break;
        case Mode::Explicit: state.v = v_; break;
        }
        if (algo == Algorithm::DAVI)
            state.pi = mode_ == Mode::Explicit ? pi_ : Policy(mdp.num_states(), 0);
        return state;
    }

private:
    InitSpec(Mode mode, double c, ValueFunction v, Policy pi)
        : mode_(mode), c_(c), v_(std::move(v)), pi_(std::move(pi)) {}

    Mode mode_;
    double c_;
    ValueFunction v_;
    Policy pi_;
};

// ---------------------------------------------------------------------------
// Single steps
// ---------------------------------------------------------------------------

/// One synchronous sweep v <- T v. Charges every (s,a).
inline void vi_batch(const Mdp& mdp, SolverState& state, CostModel cost_model) {
    state.v = apply_T(mdp, state.v);
    std::uint64_t charged = 0;
    for (StateIndex s = 0; s < mdp.num_states(); ++s)
        for (ActionIndex a = 0; a < mdp.num_actions(); ++a) charged += lookahead_cost(mdp, cost_model, s, a);
    state.cost += charged;
    ++state.iteration;
}

/// In-place full back-up of state s.
inline void avi_update(const Mdp& mdp, SolverState& state, StateIndex s, CostModel cost_model) {
    mdp.check_state(s);
    state.v[s] = bellman_backup_unchecked(mdp, state.v, s).value;
    for (ActionIndex a = 0; a < mdp.num_actions(); ++a) state.cost += lookahead_cost(mdp, cost_model, s, a);
    ++state.iteration;
}

inline StateIndex avi_step(const Mdp& mdp, SolverState& state, const StateSampler& states,
                           CostModel cost_model, RngStreams& rng) {
    const StateIndex s = states.sample(rng.state);
    avi_update(mdp, state, s, cost_model);
    return s;
}

/**
 * Back-up of state s over `subset` plus the best-so-far action pi(s).
 *
 * Ties inside the subset are broken uniformly at random using `tie_rng`.
 * pi(s) moves only when the subset's best is strictly better. A look-ahead
 * for pi(s) already in the subset is evaluated and charged once.
 */
inline void davi_update(const Mdp& mdp, SolverState& state, StateIndex s,
                        std::span<const ActionIndex> subset, CostModel cost_model, Rng& tie_rng) {
    if (!state.pi) throw UsageError("davi_update: solver state has no policy");
    if (subset.empty()) throw UsageError("davi_update: empty action subset");
    mdp.check_state(s);
    auto& pi = *state.pi;
    const ActionIndex current = pi[s];

    double best = -std::numeric_limits<double>::infinity();
    ActionIndex best_action = subset.front();
    std::size_t ties = 0;
    std::optional<double> current_value;
    for (ActionIndex a : subset) {
        mdp.check_action(a);
        const double q = lookahead_unchecked(mdp, state.v, s, a);
        state.cost += lookahead_cost(mdp, cost_model, s, a);
        if (a == current) current_value = q;
        if (q > best) {
            best = q;
            best_action = a;
            ties = 1;
        } else if (q == best) {
            ++ties;
            std::uniform_int_distribution<std::size_t> pick(0, ties - 1);
            if (pick(tie_rng) == 0) best_action = a;
        }
    }
    if (!current_value) {
        current_value = lookahead_unchecked(mdp, state.v, s, current);
        state.cost += lookahead_cost(mdp, cost_model, s, current);
    }

    state.v[s] = std::max(best, *current_value);
    if (best > *current_value) pi[s] = best_action;
    ++state.iteration;
}

/// Reusable per-run buffers for DAVI.
struct DaviWorkspace {
    std::vector<ActionIndex> subset;
    SubsetScratch scratch;
};

inline StateIndex davi_step(const Mdp& mdp, SolverState& state, const StateSampler& states,
                            const ActionSubsetSampler& actions, CostModel cost_model, RngStreams& rng,
                            DaviWorkspace& work) {
    const StateIndex s = states.sample(rng.state);
    actions.sample(s, rng.action, work.subset, work.scratch);
    davi_update(mdp, state, s, work.subset, cost_model, rng.action);
    return s;
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

struct Budget {
    enum class Unit { Iterations, Cost };
    Unit unit = Unit::Iterations;
    std::uint64_t amount = 0;

    static Budget iterations(std::uint64_t n) { return {Unit::Iterations, n}; }
    static Budget cost(std::uint64_t c) { return {Unit::Cost, c}; }

    bool exhausted(const SolverState& state) const {
        return unit == Unit::Iterations ? state.iteration >= amount : state.cost >= amount;
    }
};

struct RunConfig {
    Algorithm algorithm = Algorithm::VI;
    InitSpec init = InitSpec::zero();
    std::optional<StateSampler> state_sampler;        // uniform when absent
    std::optional<ActionSubsetSampler> action_sampler; // required for DAVI
    CostModel cost_model = CostModel::LookaheadCount;
    Budget budget;
    StateIndex tracked_state = 0;
    std::uint64_t seed = 0;
    std::uint64_t thinning = 1; // record every k-th step; the last step is always kept
};

struct Checkpoint {
    std::uint64_t iteration;
    std::uint64_t cost;
    double tracked_value;
};

struct RunTrace {
    Algorithm algorithm = Algorithm::VI;
    std::uint64_t seed = 0;
    StateIndex tracked_state = 0;
    std::vector<Checkpoint> checkpoints;
    ValueFunction final_v;
    std::optional<Policy> final_pi;
};

/// Called after every step with the updated state.
using StepObserver = std::function<void(const SolverState&)>;

/**
 * Runs one algorithm until the budget is exhausted. A cost budget stops at
 * the first step that reaches it, so the last step may overshoot.
 */
inline RunTrace run(const Mdp& mdp, const RunConfig& config, const StepObserver& observer = {}) {
    mdp.check_state(config.tracked_state);
    if (config.thinning == 0) throw UsageError("run: thinning must be >= 1");

    const StateSampler states =
        config.state_sampler ? *config.state_sampler : StateSampler::uniform(mdp.num_states());
    if (states.num_states() != mdp.num_states()) throw UsageError("run: state sampler size != S");
    if (config.algorithm == Algorithm::DAVI) {
        if (!config.action_sampler) throw UsageError("run: DAVI needs an action subset sampler");
        if (config.action_sampler->num_actions() != mdp.num_actions())
            throw UsageError("run: action sampler size != A");
    }

    SolverState state = config.init.initial_state(mdp, config.algorithm);
    RngStreams rng(config.seed);
    DaviWorkspace work;

    RunTrace trace;
    trace.algorithm = config.algorithm;
    trace.seed = config.seed;
    trace.tracked_state = config.tracked_state;
    trace.checkpoints.push_back({0, 0, state.v[config.tracked_state]});

    std::uint64_t steps = 0;
    bool last_recorded = true;
    while (!config.budget.exhausted(state)) {
        switch (config.algorithm) {
        case Algorithm::VI: vi_batch(mdp, state, config.cost_model); break;
        case Algorithm::AVI: avi_step(mdp, state, states, config.cost_model, rng); break;
        case Algorithm::DAVI:
            davi_step(mdp, state, states, *config.action_sampler, config.cost_model, rng, work);
            break;
        }
        if (observer) observer(state);
        ++steps;
        last_recorded = steps % config.thinning == 0;
        if (last_recorded)
            trace.checkpoints.push_back({state.iteration, state.cost, state.v[config.tracked_state]});
    }
    if (!last_recorded)
        trace.checkpoints.push_back({state.iteration, state.cost, state.v[config.tracked_state]});

    trace.final_v = std::move(state.v);
    trace.final_pi = std::move(state.pi);
    return trace;
}

} // namespace davi
