#pragma once

#include "davi/solvers.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <ostream>
#include <string>

namespace davi {

/// Shortest-round-trip-safe decimal form used by every CSV writer.
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Columns: algorithm,seed,iteration,cost,tracked_value
inline void write_trace_csv(std::ostream& out, const RunTrace& trace) {
    out << "algorithm,seed,iteration,cost,tracked_value\n";
    for (const auto& c : trace.checkpoints)
        out << to_string(trace.algorithm) << ',' << trace.seed << ',' << c.iteration << ',' << c.cost
            << ',' << format_double(c.tracked_value) << '\n';
}

inline constexpr std::size_t kSidecarMaxStates = 1024;

inline nlohmann::json solution_to_json(const RunTrace& trace) {
    nlohmann::json j{{"algorithm", to_string(trace.algorithm)},
                     {"seed", trace.seed},
                     {"value", trace.final_v}};
    j["policy"] = trace.final_pi ? nlohmann::json(*trace.final_pi) : nlohmann::json(nullptr);
    return j;
}

} // namespace davi
