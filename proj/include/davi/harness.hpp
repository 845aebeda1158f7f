#pragma once

#include "davi/evaluation.hpp"
#include "davi/generators.hpp"
#include "davi/mdp_io.hpp"
#include "davi/solvers.hpp"
#include "davi/trace_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace davi {

/// One solver configuration inside an experiment.
struct AlgorithmConfig {
    Algorithm algorithm = Algorithm::AVI;
    std::optional<std::size_t> m;                  // DAVI subset size
    SubsetMode action_mode = SubsetMode::Uniform;
    std::vector<std::vector<double>> action_weights; // weighted mode only
    std::optional<std::vector<double>> state_probabilities; // uniform when absent
    InitSpec init = InitSpec::zero();
    CostModel cost_model = CostModel::LookaheadCount;
    std::string label; // defaults to "vi", "avi" or "davi m=<m>"

    std::string display_label() const {
        if (!label.empty()) return label;
        std::string out(to_string(algorithm));
        if (algorithm == Algorithm::DAVI && m) out += " m=" + std::to_string(*m);
        return out;
    }
};

struct ExperimentConfig {
    std::string name = "experiment";
    GeneratorSpec generator;
    std::vector<AlgorithmConfig> algorithms;
    std::size_t runs = 200;
    std::uint64_t budget = 0;     // cost units
    std::size_t grid_points = 200;
    std::uint64_t base_seed = 0;
    StateIndex tracked_state = 0;
    std::string output_dir = ".";
    std::size_t workers = 1;
    bool compute_oracle = false; // also solve each MDP exactly and report the mean v*(tracked)

    void validate() const {
        generator.validate();
        if (runs < 1) throw UsageError("experiment: runs must be >= 1");
        if (budget == 0) throw UsageError("experiment: budget must be > 0");
        if (grid_points < 2) throw UsageError("experiment: grid_points must be >= 2");
        if (workers < 1) throw UsageError("experiment: workers must be >= 1");
        if (algorithms.empty()) throw UsageError("experiment: no algorithms configured");
        for (const auto& a : algorithms) {
            if (a.algorithm != Algorithm::DAVI) continue;
            if (!a.m) throw UsageError("experiment: DAVI config needs m");
            if (*a.m < 1 || *a.m > generator.num_actions)
                throw UsageError("experiment: DAVI m must lie in [1, A]");
        }
    }
};

struct AggregateCurve {
    std::string label;
    Algorithm algorithm = Algorithm::AVI;
    std::optional<std::size_t> m;
    std::vector<double> grid;
    std::vector<double> mean;
    std::vector<double> sem; ///< sample stddev / sqrt(runs); 0 for a single run
    std::size_t runs = 0;

    /// First grid cost at which the mean reaches `level`, if any.
    std::optional<double> first_cost_reaching(double level) const {
        for (std::size_t k = 0; k < grid.size(); ++k)
            if (mean[k] >= level) return grid[k];
        return std::nullopt;
    }
};

struct RunRecord {
    std::uint64_t mdp_seed = 0;
    std::uint64_t mdp_fingerprint = 0;
    std::vector<std::uint64_t> algorithm_seeds;
    std::optional<double> oracle_value;
};

struct ExperimentResult {
    std::vector<AggregateCurve> curves;
    std::vector<RunRecord> runs;
    std::optional<double> oracle_mean;
};

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

inline AlgorithmConfig algorithm_config_from_json(const nlohmann::json& j) {
    detail::require_known_keys(j, {"algorithm", "m", "label", "cost_model", "init", "sampler"}, "algorithm config");
    AlgorithmConfig a;
    a.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    if (j.contains("m")) a.m = j.at("m").get<std::size_t>();
    a.label = j.value("label", std::string{});
    a.cost_model = parse_cost_model(j.value("cost_model", std::string("lookahead")));
    if (j.contains("init")) {
        const auto& init = j.at("init");
        const auto mode = init.is_string() ? init.get<std::string>() : init.at("mode").get<std::string>();
        if (mode == "zero") {
            a.init = InitSpec::zero();
        } else if (mode == "negative") {
            a.init = InitSpec::constant_negative(init.at("c").get<double>());
        } else {
            throw UsageError("experiment: init mode must be zero|negative");
        }
    }
    if (j.contains("sampler")) {
        const auto& s = j.at("sampler");
        detail::require_known_keys(s, {"state", "action"}, "sampler");
        if (s.contains("state") && s.at("state").is_array())
            a.state_probabilities = s.at("state").get<std::vector<double>>();
        else if (s.contains("state") && s.at("state") != "uniform")
            throw UsageError("experiment: sampler.state must be \"uniform\" or a probability list");
        if (s.contains("action")) {
            const auto& act = s.at("action");
            detail::require_known_keys(act, {"mode", "m", "weights"}, "sampler.action");
            const auto mode = act.value("mode", std::string("uniform"));
            if (mode == "weighted") {
                a.action_mode = SubsetMode::Weighted;
                a.action_weights = act.at("weights").get<std::vector<std::vector<double>>>();
            } else if (mode != "uniform") {
                throw UsageError("experiment: sampler.action.mode must be uniform|weighted");
            }
            if (act.contains("m")) a.m = act.at("m").get<std::size_t>();
        }
    }
    return a;
}

inline nlohmann::json to_json(const AlgorithmConfig& a) {
    nlohmann::json j{{"algorithm", to_string(a.algorithm)},
                     {"label", a.display_label()},
                     {"cost_model", to_string(a.cost_model)}};
    if (a.m) j["m"] = *a.m;
    if (a.init.mode() == InitSpec::Mode::ConstantNegative)
        j["init"] = {{"mode", "negative"}, {"c", a.init.constant()}};
    else
        j["init"] = {{"mode", "zero"}};
    nlohmann::json sampler{{"state", a.state_probabilities ? nlohmann::json(*a.state_probabilities)
                                                           : nlohmann::json("uniform")}};
    if (a.algorithm == Algorithm::DAVI) {
        nlohmann::json action{{"mode", a.action_mode == SubsetMode::Uniform ? "uniform" : "weighted"}};
        if (a.m) action["m"] = *a.m;
        if (a.action_mode == SubsetMode::Weighted) action["weights"] = a.action_weights;
        sampler["action"] = std::move(action);
    }
    j["sampler"] = std::move(sampler);
    return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    detail::require_known_keys(j, {"name", "generator", "algorithms", "runs", "budget", "grid_points", "base_seed",
                                   "tracked_state", "output_dir", "workers", "compute_oracle"},
                               "experiment config");
    try {
        ExperimentConfig c;
        c.name = j.value("name", c.name);
        c.generator = generator_spec_from_json(j.at("generator"));
        for (const auto& a : j.at("algorithms")) c.algorithms.push_back(algorithm_config_from_json(a));
        c.runs = j.value("runs", c.runs);
        c.budget = j.at("budget").get<std::uint64_t>();
        c.grid_points = j.value("grid_points", c.grid_points);
        c.base_seed = j.value("base_seed", c.base_seed);
        c.tracked_state = j.value("tracked_state", c.tracked_state);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.workers = j.value("workers", c.workers);
        c.compute_oracle = j.value("compute_oracle", c.compute_oracle);
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("experiment config: ") + e.what());
    }
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json algos = nlohmann::json::array();
    for (const auto& a : c.algorithms) algos.push_back(to_json(a));
    return {{"name", c.name},           {"generator", to_json(c.generator)},
            {"algorithms", algos},      {"runs", c.runs},
            {"budget", c.budget},       {"grid_points", c.grid_points},
            {"base_seed", c.base_seed}, {"tracked_state", c.tracked_state},
            {"output_dir", c.output_dir}, {"compute_oracle", c.compute_oracle}};
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("malformed config " + path + ": " + e.what());
    }
    return experiment_config_from_json(j);
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

/// k * budget / (points - 1) for k = 0..points-1.
inline std::vector<double> cost_grid(std::uint64_t budget, std::size_t points) {
    std::vector<double> grid(points);
    for (std::size_t k = 0; k < points; ++k)
        grid[k] = static_cast<double>(budget) * static_cast<double>(k) / static_cast<double>(points - 1);
    return grid;
}

/// Value at the largest checkpoint cost <= g, for every grid point g.
inline std::vector<double> step_hold(const RunTrace& trace, std::span<const double> grid) {
    std::vector<double> out(grid.size());
    std::size_t c = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        while (c + 1 < trace.checkpoints.size() &&
               static_cast<double>(trace.checkpoints[c + 1].cost) <= grid[k])
            ++c;
        out[k] = trace.checkpoints[c].tracked_value;
    }
    return out;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Seed for algorithm config `index` within the run whose MDP seed is `mdp_seed`.
inline std::uint64_t algorithm_seed(std::uint64_t mdp_seed, std::size_t index) {
    return detail::splitmix64(detail::splitmix64(mdp_seed) ^ (0xa1b2c3d4ULL + index));
}

inline RunConfig make_run_config(const AlgorithmConfig& a, const Mdp& mdp, const ExperimentConfig& c,
                                 std::uint64_t seed) {
    RunConfig rc;
    rc.algorithm = a.algorithm;
    rc.init = a.init;
    rc.cost_model = a.cost_model;
    rc.budget = Budget::cost(c.budget);
    rc.tracked_state = c.tracked_state;
    rc.seed = seed;
    if (a.state_probabilities) rc.state_sampler = StateSampler(*a.state_probabilities);
    if (a.algorithm == Algorithm::DAVI) {
        rc.action_sampler = a.action_mode == SubsetMode::Uniform
                                ? ActionSubsetSampler::uniform(mdp.num_actions(), *a.m)
                                : ActionSubsetSampler::weighted(mdp.num_actions(), *a.m, a.action_weights);
    }
    return rc;
}

/**
 * Run i generates its MDP with seed base_seed + i and runs every algorithm
 * config on that same instance. Traces are step-held onto a uniform cost
 * grid and averaged in run order, so the result does not depend on the
 * worker count.
 */
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto grid = cost_grid(config.budget, config.grid_points);
    const std::size_t n_algos = config.algorithms.size();

    std::vector<std::vector<std::vector<double>>> held(config.runs); // [run][algo][grid]
    std::vector<RunRecord> records(config.runs);

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::string error_message;

    auto worker = [&] {
        while (!failed) {
            const std::size_t i = next++;
            if (i >= config.runs) return;
            auto& rec = records[i];
            rec.mdp_seed = config.base_seed + i;
            std::string current = "generator";
            try {
                GeneratorSpec spec = config.generator;
                spec.seed = rec.mdp_seed;
                const Mdp mdp = generate(spec);
                rec.mdp_fingerprint = mdp_fingerprint(mdp);
                if (config.compute_oracle)
                    rec.oracle_value = optimal_value_oracle(mdp, 1e-10).value.at(config.tracked_state);
                held[i].resize(n_algos);
                for (std::size_t j = 0; j < n_algos; ++j) {
                    current = config.algorithms[j].display_label();
                    const auto seed = algorithm_seed(rec.mdp_seed, j);
                    rec.algorithm_seeds.push_back(seed);
                    const auto trace = run(mdp, make_run_config(config.algorithms[j], mdp, config, seed));
                    held[i][j] = step_hold(trace, grid);
                }
            } catch (const std::exception& e) {
                std::lock_guard lock(error_mutex);
                if (!failed) {
                    error_message = "run with MDP seed " + std::to_string(rec.mdp_seed) + ", algorithm '" +
                                    current + "' failed: " + e.what();
                    failed = true;
                }
            }
        }
    };

    const std::size_t n_workers = std::min(config.workers, config.runs);
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed) throw std::runtime_error(error_message);

    ExperimentResult result;
    const double n = static_cast<double>(config.runs);
    for (std::size_t j = 0; j < n_algos; ++j) {
        AggregateCurve curve;
        curve.label = config.algorithms[j].display_label();
        curve.algorithm = config.algorithms[j].algorithm;
        curve.m = config.algorithms[j].m;
        curve.grid = grid;
        curve.runs = config.runs;
        curve.mean.assign(grid.size(), 0.0);
        curve.sem.assign(grid.size(), 0.0);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            double sum = 0.0;
            for (std::size_t i = 0; i < config.runs; ++i) sum += held[i][j][k];
            const double mean = sum / n;
            double sq = 0.0;
            for (std::size_t i = 0; i < config.runs; ++i) {
                const double d = held[i][j][k] - mean;
                sq += d * d;
            }
            curve.mean[k] = mean;
            curve.sem[k] = config.runs > 1 ? std::sqrt(sq / (n - 1.0)) / std::sqrt(n) : 0.0;
        }
        result.curves.push_back(std::move(curve));
    }
    if (config.compute_oracle) {
        double sum = 0.0;
        for (const auto& r : records) sum += *r.oracle_value;
        result.oracle_mean = sum / n;
    }
    result.runs = std::move(records);
    return result;
}

// ---------------------------------------------------------------------------
// Outputs
// ---------------------------------------------------------------------------

/// Columns: algorithm,m,grid_cost,mean,sem,runs
inline void write_curves_csv(std::ostream& out, const std::vector<AggregateCurve>& curves) {
    out << "algorithm,m,grid_cost,mean,sem,runs\n";
    for (const auto& c : curves)
        for (std::size_t k = 0; k < c.grid.size(); ++k)
            out << c.label << ',' << (c.m ? std::to_string(*c.m) : std::string{}) << ','
                << format_double(c.grid[k]) << ',' << format_double(c.mean[k]) << ','
                << format_double(c.sem[k]) << ',' << c.runs << '\n';
}

namespace detail {

inline std::string xml_escape(std::string_view text) {
    std::string out;
    for (char ch : text) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += ch;
        }
    }
    return out;
}

} // namespace detail

/// Mean curve per config with a shaded +-SEM band, legend and axis labels.
inline std::string render_svg(const std::vector<AggregateCurve>& curves, const std::string& title) {
    constexpr double width = 800, height = 500;
    constexpr double left = 70, right = 190, top = 40, bottom = 60;
    constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                       "#9467bd", "#8c564b", "#e377c2", "#17becf"};

    double x_max = 1.0, y_lo = 0.0, y_hi = 1.0;
    bool first = true;
    for (const auto& c : curves) {
        for (std::size_t k = 0; k < c.grid.size(); ++k) {
            x_max = std::max(x_max, c.grid[k]);
            const double lo = c.mean[k] - c.sem[k], hi = c.mean[k] + c.sem[k];
            if (first) {
                y_lo = lo;
                y_hi = hi;
                first = false;
            }
            y_lo = std::min(y_lo, lo);
            y_hi = std::max(y_hi, hi);
        }
    }
    if (y_hi - y_lo < 1e-12) {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    const double pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;

    const double plot_w = width - left - right, plot_h = height - top - bottom;
    auto px = [&](double x) { return left + plot_w * x / x_max; };
    auto py = [&](double y) { return top + plot_h * (1.0 - (y - y_lo) / (y_hi - y_lo)); };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    auto tick = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return std::string(buf);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << num(left + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << detail::xml_escape(title) << "</text>\n";
    svg << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n"
        << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + plot_h) << "\" x2=\"" << num(left + plot_w)
        << "\" y2=\"" << num(top + plot_h) << "\"/>\n"
        << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
        << num(top + plot_h) << "\"/>\n</g>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = x_max * t / 4.0, yv = y_lo + (y_hi - y_lo) * t / 4.0;
        svg << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(top + plot_h + 18)
            << "\" text-anchor=\"middle\" font-size=\"11\">" << tick(xv) << "</text>\n";
        svg << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(yv) + 4)
            << "\" text-anchor=\"end\" font-size=\"11\">" << tick(yv) << "</text>\n";
    }
    svg << "<text x=\"" << num(left + plot_w / 2) << "\" y=\"" << num(height - 15)
        << "\" text-anchor=\"middle\" font-size=\"13\">cost (look-ahead evaluations)</text>\n";
    svg << "<text x=\"18\" y=\"" << num(top + plot_h / 2) << "\" text-anchor=\"middle\" font-size=\"13\" "
        << "transform=\"rotate(-90 18 " << num(top + plot_h / 2) << ")\">tracked state value</text>\n";

    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto& c = curves[i];
        const char* color = palette[i % std::size(palette)];
        svg << "<polygon class=\"sem-band\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
        for (std::size_t k = 0; k < c.grid.size(); ++k)
            svg << num(px(c.grid[k])) << ',' << num(py(c.mean[k] + c.sem[k])) << ' ';
        for (std::size_t k = c.grid.size(); k-- > 0;)
            svg << num(px(c.grid[k])) << ',' << num(py(c.mean[k] - c.sem[k])) << ' ';
        svg << "\"/>\n";
        svg << "<polyline class=\"mean\" data-label=\"" << detail::xml_escape(c.label) << '"'
            << " fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < c.grid.size(); ++k)
            svg << num(px(c.grid[k])) << ',' << num(py(c.mean[k])) << ' ';
        svg << "\"/>\n";
        const double ly = top + 10 + 20.0 * static_cast<double>(i);
        svg << "<line x1=\"" << num(width - right + 15) << "\" y1=\"" << num(ly) << "\" x2=\""
            << num(width - right + 40) << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << num(width - right + 46) << "\" y=\"" << num(ly + 4) << "\" font-size=\"12\">"
            << detail::xml_escape(c.label) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

struct OutputPaths {
    std::filesystem::path csv;
    std::filesystem::path svg;
    std::filesystem::path manifest;
};

inline nlohmann::json manifest_json(const ExperimentResult& result, const ExperimentConfig& config) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : result.runs) {
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(r.mdp_fingerprint));
        nlohmann::json entry{{"mdp_seed", r.mdp_seed}, {"mdp_fingerprint", hex},
                             {"algorithm_seeds", r.algorithm_seeds}};
        if (r.oracle_value) entry["oracle_value"] = *r.oracle_value;
        runs.push_back(std::move(entry));
    }
    nlohmann::json j{{"config", to_json(config)}, {"runs", std::move(runs)}};
    if (result.oracle_mean) j["oracle_mean"] = *result.oracle_mean;
    return j;
}

/// Writes <name>.csv, <name>.svg and <name>_manifest.json into the output directory.
inline OutputPaths emit_outputs(const ExperimentResult& result, const ExperimentConfig& config) {
    if (result.curves.empty()) throw UsageError("emit_outputs: no curves");
    const std::filesystem::path dir(config.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());

    OutputPaths paths{dir / (config.name + ".csv"), dir / (config.name + ".svg"),
                      dir / (config.name + "_manifest.json")};
    auto open = [](const std::filesystem::path& p) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + p.string());
        return out;
    };
    {
        auto out = open(paths.csv);
        write_curves_csv(out, result.curves);
    }
    {
        auto out = open(paths.svg);
        out << render_svg(result.curves, config.name);
    }
    {
        auto out = open(paths.manifest);
        out << manifest_json(result, config).dump(2) << '\n';
    }
    return paths;
}

} // namespace davi
