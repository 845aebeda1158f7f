#pragma once

#include "davi/evaluation.hpp"
#include "davi/mdp.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

// Closed-form horizon, iteration and complexity bounds for VI, asynchronous
// VI and DAVI, plus optimality checks against the reference solution.
//
// The complexity magnitudes drop all big-O constants. They are for comparing
// settings side by side, not for predicting run times.

namespace davi {

namespace detail {

inline void require_discount(double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw UsageError("discount must lie in [0,1)");
}
inline void require_probability(double p, const char* name) {
    if (!(p > 0.0 && p < 1.0)) throw UsageError(std::string(name) + " must lie in (0,1)");
}
inline void require_delta(double delta) {
    // delta = 1 is accepted so the limit delta -> 1 can be evaluated.
    if (!(delta > 0.0 && delta <= 1.0)) throw UsageError("delta must lie in (0,1)");
}

/// ln(1/(1-q)) without cancellation for small q.
inline double log_inverse_complement(double q) { return -std::log1p(-q); }

} // namespace detail

/// Default bound on ||v* - v_0|| for rewards in [0,1].
inline double default_distance_bound(double gamma, double v0_norm = 0.0) {
    detail::require_discount(gamma);
    if (!(v0_norm >= 0.0)) throw UsageError("||v_0|| must be non-negative");
    return 1.0 / (1.0 - gamma) + v0_norm;
}

/// H = ln(dist / eps) / (1 - gamma).
inline double horizon(double gamma, double eps, double dist) {
    detail::require_discount(gamma);
    if (!(dist > 0.0)) throw UsageError("distance bound must be positive");
    if (!(eps > 0.0) || !(eps < dist)) throw UsageError("epsilon must lie in (0, distance bound)");
    return std::log(dist / eps) / (1.0 - gamma);
}

/// l * ceil(ln(S l / delta) / ln(1 / (1 - q))). With q = p_min this is the
/// asynchronous VI bound.
inline std::uint64_t iteration_bound(std::uint64_t l, std::uint64_t num_states, double q_min,
                                     double delta) {
    if (l < 1) throw UsageError("l must be >= 1");
    if (num_states < 1) throw UsageError("S must be >= 1");
    detail::require_probability(q_min, "q_min");
    detail::require_probability(delta, "delta");
    const double ratio = std::log(static_cast<double>(num_states) * static_cast<double>(l) / delta) /
                         detail::log_inverse_complement(q_min);
    return l * static_cast<std::uint64_t>(std::ceil(ratio));
}

/// q_min for uniform states and uniform m-subsets: (1/S) * (m/A).
inline double uniform_q_min(std::size_t num_states, std::size_t num_actions, std::size_t m) {
    if (num_states == 0 || num_actions == 0) throw UsageError("S and A must be positive");
    if (m == 0 || m > num_actions) throw UsageError("m must lie in [1, A]");
    return (1.0 / static_cast<double>(num_states)) *
           (static_cast<double>(m) / static_cast<double>(num_actions));
}

/// width * S * H * ln(S H / delta) / ln(1 / (1 - min_prob)); the shared
/// shape of the asynchronous VI (width A, p_min) and DAVI (width m, q_min) rows.
inline double sampled_complexity(double width, std::size_t num_states, double horizon_value,
                                 double delta, double min_prob) {
    detail::require_probability(min_prob, "minimum sampling probability");
    detail::require_delta(delta);
    const double S = static_cast<double>(num_states);
    return width * S * horizon_value * std::log(S * horizon_value / delta) /
           detail::log_inverse_complement(min_prob);
}

struct TauResult {
    double horizon;
    double tau;
    double cost_magnitude; ///< m * S * tau
};

/// tau = H ln(S H / delta) / ln(1 / (1 - q_min)).
inline TauResult tau_for_epsilon(double gamma, double eps, double dist, std::size_t num_states,
                                 double q_min, double delta, std::size_t m = 1) {
    if (num_states < 1) throw UsageError("S must be >= 1");
    detail::require_probability(q_min, "q_min");
    detail::require_delta(delta);
    const double H = horizon(gamma, eps, dist);
    const double S = static_cast<double>(num_states);
    const double tau = H * std::log(S * H / delta) / detail::log_inverse_complement(q_min);
    return {H, tau, sampled_complexity(static_cast<double>(m), num_states, H, delta, q_min)};
}

struct ComplexityTable {
    std::optional<double> vi; ///< A S^2 H at the rescaled epsilon; empty when undefined
    std::string vi_note;
    double avi = 0.0;
    double davi = 0.0;
};

inline ComplexityTable complexity_table(double gamma, double eps, double dist, std::size_t num_states,
                                        std::size_t num_actions, std::size_t m, double q_min,
                                        double p_min, double delta) {
    if (m == 0 || m > num_actions) throw UsageError("m must lie in [1, A]");
    const double H = horizon(gamma, eps, dist);

    ComplexityTable out;
    if (gamma == 0.0) {
        out.vi_note = "undefined: rescaled epsilon eps(1-gamma)/(2 gamma) divides by zero at gamma = 0";
    } else {
        const double rescaled = eps * (1.0 - gamma) / (2.0 * gamma);
        if (rescaled >= dist) {
            out.vi_note = "undefined: rescaled epsilon is not below the distance bound";
        } else {
            const double S = static_cast<double>(num_states);
            out.vi = static_cast<double>(num_actions) * S * S * horizon(gamma, rescaled, dist);
        }
    }
    out.avi = sampled_complexity(static_cast<double>(num_actions), num_states, H, delta, p_min);
    out.davi = sampled_complexity(static_cast<double>(m), num_states, H, delta, q_min);
    return out;
}

// ---------------------------------------------------------------------------
// Bound report
// ---------------------------------------------------------------------------

struct BoundInputs {
    double gamma = 0.9;
    double eps = 0.1;
    double delta = 0.05;
    std::size_t num_states = 1;
    std::size_t num_actions = 1;
    std::size_t m = 1;
    std::optional<std::uint64_t> l;  ///< contraction count; derived from eps when absent
    std::optional<double> q_min;     ///< uniform (1/S)(m/A) when absent
    std::optional<double> p_min;     ///< 1/S when absent
    std::optional<double> dist;      ///< ||v* - v_0||; 1/(1-gamma) + ||v_0|| when absent
    double v0_norm = 0.0;
};

struct BoundReport {
    BoundInputs inputs;
    double dist = 0.0;
    double q_min = 0.0;
    double p_min = 0.0;
    std::uint64_t l = 0;
    double horizon = 0.0;
    std::uint64_t n_iterations = 0;
    std::uint64_t n_iterations_avi = 0;
    double tau = 0.0;
    double cost_magnitude = 0.0;
    ComplexityTable table;
};

/**
 * Evaluates every bound for one setting. When l is not given it is the
 * smallest integer with gamma^l ||v* - v_0|| <= eps.
 */
inline BoundReport bound_report(const BoundInputs& in) {
    BoundReport r;
    r.inputs = in;
    r.dist = in.dist ? *in.dist : default_distance_bound(in.gamma, in.v0_norm);
    r.q_min = in.q_min ? *in.q_min : uniform_q_min(in.num_states, in.num_actions, in.m);
    r.p_min = in.p_min ? *in.p_min : 1.0 / static_cast<double>(in.num_states);
    if (in.l) {
        r.l = *in.l;
    } else if (in.gamma == 0.0) {
        r.l = 1;
    } else {
        detail::require_discount(in.gamma);
        const double needed = std::log(r.dist / in.eps) / std::log(1.0 / in.gamma);
        r.l = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(needed)));
    }
    const auto tau = tau_for_epsilon(in.gamma, in.eps, r.dist, in.num_states, r.q_min, in.delta, in.m);
    r.horizon = tau.horizon;
    r.tau = tau.tau;
    r.cost_magnitude = tau.cost_magnitude;
    r.n_iterations = iteration_bound(r.l, in.num_states, r.q_min, in.delta);
    if (r.p_min < 1.0) r.n_iterations_avi = iteration_bound(r.l, in.num_states, r.p_min, in.delta);
    r.table = complexity_table(in.gamma, in.eps, r.dist, in.num_states, in.num_actions, in.m, r.q_min,
                               r.p_min, in.delta);
    return r;
}

inline nlohmann::json to_json(const BoundReport& r) {
    nlohmann::json table{{"avi", r.table.avi}, {"davi", r.table.davi}};
    table["vi"] = r.table.vi ? nlohmann::json(*r.table.vi) : nlohmann::json("undefined");
    if (!r.table.vi_note.empty()) table["vi_note"] = r.table.vi_note;
    return {{"inputs",
             {{"gamma", r.inputs.gamma},
              {"eps", r.inputs.eps},
              {"delta", r.inputs.delta},
              {"S", r.inputs.num_states},
              {"A", r.inputs.num_actions},
              {"m", r.inputs.m},
              {"dist", r.dist},
              {"q_min", r.q_min},
              {"p_min", r.p_min},
              {"l", r.l}}},
            {"horizon", r.horizon},
            {"n_iterations", r.n_iterations},
            {"n_iterations_avi", r.n_iterations_avi},
            {"tau", r.tau},
            {"cost_magnitude", r.cost_magnitude},
            {"complexity", std::move(table)}};
}

// ---------------------------------------------------------------------------
// Value gap and optimality checks
// ---------------------------------------------------------------------------

struct GapReport {
    /// Smallest non-zero best-minus-other look-ahead difference per state;
    /// empty where every action ties.
    std::vector<std::optional<double>> per_state;
    std::optional<double> global;
    /// global / (2 gamma); +infinity when gamma = 0, empty when global is.
    std::optional<double> capture_radius;
    std::string note;
};

inline GapReport value_gap(const Mdp& mdp, std::span<const double> v) {
    mdp.check_values(v);
    GapReport out;
    out.per_state.resize(mdp.num_states());
    std::vector<double> q(mdp.num_actions());
    for (StateIndex s = 0; s < mdp.num_states(); ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (ActionIndex a = 0; a < mdp.num_actions(); ++a) {
            q[a] = lookahead_unchecked(mdp, v, s, a);
            best = std::max(best, q[a]);
        }
        std::optional<double> gap;
        for (double x : q) {
            const double d = best - x;
            if (d != 0.0 && (!gap || d < *gap)) gap = d;
        }
        out.per_state[s] = gap;
        if (gap && (!out.global || *gap < *out.global)) out.global = gap;
    }
    if (!out.global) {
        out.note = "every action ties in every state; gap undefined";
    } else if (mdp.discount() == 0.0) {
        out.capture_radius = std::numeric_limits<double>::infinity();
        out.note = "discount 0: capture radius unbounded";
    } else {
        out.capture_radius = *out.global / (2.0 * mdp.discount());
    }
    return out;
}

/// Slack applied on top of eps so that oracle round-off does not reject
/// exactly optimal policies.
inline constexpr double kVerifySlack = 1e-9;
inline constexpr double kOracleTolerance = 1e-12;

struct EpsilonCheck {
    bool epsilon_optimal = false;
    std::vector<double> shortfall; ///< v*(s) - v_pi(s)
    double worst_shortfall = 0.0;
    StateIndex worst_state = 0;
    ValueFunction policy_value;
    ValueFunction optimal_value;
};

inline EpsilonCheck check_epsilon_optimal(const Mdp& mdp, std::span<const ActionIndex> pi, double eps,
                                          const OptimalSolution& oracle) {
    if (!(eps >= 0.0)) throw UsageError("epsilon must be non-negative");
    mdp.check_policy(pi);
    EpsilonCheck out;
    out.policy_value = policy_evaluation(mdp, pi, kOracleTolerance);
    out.optimal_value = oracle.value;
    out.shortfall.resize(mdp.num_states());
    out.worst_shortfall = -std::numeric_limits<double>::infinity();
    for (StateIndex s = 0; s < mdp.num_states(); ++s) {
        out.shortfall[s] = out.optimal_value[s] - out.policy_value[s];
        if (out.shortfall[s] > out.worst_shortfall) {
            out.worst_shortfall = out.shortfall[s];
            out.worst_state = s;
        }
    }
    out.epsilon_optimal = out.worst_shortfall <= eps + kVerifySlack;
    return out;
}

inline EpsilonCheck check_epsilon_optimal(const Mdp& mdp, std::span<const ActionIndex> pi, double eps) {
    return check_epsilon_optimal(mdp, pi, eps, optimal_value_oracle(mdp, kOracleTolerance));
}

/// True iff pi's value lies strictly within the optimal value gap of v*,
/// which makes pi optimal.
inline bool check_optimal_via_gap(const Mdp& mdp, std::span<const ActionIndex> pi,
                                  const OptimalSolution& oracle) {
    const auto gap = value_gap(mdp, oracle.value);
    if (!gap.global) throw ContractViolation("check_optimal_via_gap: " + gap.note);
    const auto check = check_epsilon_optimal(mdp, pi, 0.0, oracle);
    return check.worst_shortfall < *gap.global;
}

inline bool check_optimal_via_gap(const Mdp& mdp, std::span<const ActionIndex> pi) {
    return check_optimal_via_gap(mdp, pi, optimal_value_oracle(mdp, kOracleTolerance));
}

} // namespace davi
