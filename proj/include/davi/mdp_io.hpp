#pragma once

#include "davi/mdp.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>

namespace davi {

// JSON layout:
//   {num_states, num_actions, discount, episodic,
//    rewards: [[r(s,0), ...] per state],
//    transitions: [[[[s', p], ...] per action] per state]}

inline nlohmann::json mdp_to_json(const Mdp& mdp) {
    nlohmann::json rewards = nlohmann::json::array();
    nlohmann::json transitions = nlohmann::json::array();
    for (StateIndex s = 0; s < mdp.num_states(); ++s) {
        nlohmann::json row = nlohmann::json::array();
        nlohmann::json per_action = nlohmann::json::array();
        for (ActionIndex a = 0; a < mdp.num_actions(); ++a) {
            row.push_back(mdp.reward(s, a));
            nlohmann::json list = nlohmann::json::array();
            for (const auto& t : mdp.transitions(s, a))
                list.push_back(nlohmann::json::array({t.next, t.probability}));
            per_action.push_back(std::move(list));
        }
        rewards.push_back(std::move(row));
        transitions.push_back(std::move(per_action));
    }
    return {{"num_states", mdp.num_states()},
            {"num_actions", mdp.num_actions()},
            {"discount", mdp.discount()},
            {"episodic", mdp.episodic()},
            {"rewards", std::move(rewards)},
            {"transitions", std::move(transitions)}};
}

inline Mdp mdp_from_json(const nlohmann::json& j) {
    try {
        const auto S = j.at("num_states").get<std::size_t>();
        const auto A = j.at("num_actions").get<std::size_t>();
        const auto& rewards_in = j.at("rewards");
        const auto& transitions_in = j.at("transitions");
        if (rewards_in.size() != S || transitions_in.size() != S)
            throw UsageError("MDP JSON: rewards/transitions must have num_states rows");

        std::vector<double> rewards;
        rewards.reserve(S * A);
        std::vector<std::vector<Transition>> transitions;
        transitions.reserve(S * A);
        for (std::size_t s = 0; s < S; ++s) {
            if (rewards_in[s].size() != A || transitions_in[s].size() != A)
                throw UsageError("MDP JSON: state " + std::to_string(s) +
                                 " must list num_actions entries");
            for (std::size_t a = 0; a < A; ++a) {
                rewards.push_back(rewards_in[s][a].get<double>());
                std::vector<Transition> list;
                for (const auto& pair : transitions_in[s][a]) {
                    if (!pair.is_array() || pair.size() != 2)
                        throw UsageError("MDP JSON: transitions must be [next, probability] pairs");
                    list.push_back({pair[0].get<StateIndex>(), pair[1].get<double>()});
                }
                transitions.push_back(std::move(list));
            }
        }
        return Mdp(S, A, j.at("discount").get<double>(), j.value("episodic", false),
                   std::move(rewards), std::move(transitions));
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("MDP JSON: ") + e.what());
    }
}

inline std::string serialize_mdp(const Mdp& mdp) { return mdp_to_json(mdp).dump(); }

inline Mdp load_mdp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open MDP file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("malformed MDP file " + path + ": " + e.what());
    }
    return mdp_from_json(j);
}

inline void save_mdp(const Mdp& mdp, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write MDP file: " + path);
    out << serialize_mdp(mdp) << '\n';
}

/// FNV-1a over the serialized form; used to confirm paired runs share an MDP.
inline std::uint64_t mdp_fingerprint(const Mdp& mdp) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : serialize_mdp(mdp)) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace davi
