// davi_lab: command-line front end for the davi planning library.
//
// Exit codes: 0 success, 1 verification failed, 2 usage error, 3 runtime failure.

#include "davi/davi.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNegative = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw davi::UsageError("cannot open " + path);
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw davi::UsageError("malformed JSON in " + path + ": " + e.what());
    }
}

std::size_t default_workers() {
    if (const char* env = std::getenv("DAVI_LAB_THREADS")) {
        try {
            const long n = std::stol(env);
            if (n >= 1) return static_cast<std::size_t>(n);
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring invalid DAVI_LAB_THREADS='" << env << "'\n";
    }
    return 1;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

int cmd_generate(const GenerateArgs& args) {
    auto j = read_json_file(args.config);
    if (j.contains("generator")) j = j.at("generator");
    auto spec = davi::generator_spec_from_json(j);
    if (args.seed) spec.seed = *args.seed;
    const auto mdp = davi::generate(spec);
    davi::save_mdp(mdp, args.out);

    const auto r = mdp.rewards();
    double lo = r[0], hi = r[0], sum = 0.0;
    std::size_t nonzero = 0;
    for (double x : r) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        sum += x;
        if (x != 0.0) ++nonzero;
    }
    std::cout << "wrote " << args.out << "\n"
              << "S = " << mdp.num_states() << "\n"
              << "A = " << mdp.num_actions() << "\n"
              << "rewards: min " << lo << ", max " << hi << ", mean " << sum / static_cast<double>(r.size())
              << ", nonzero " << nonzero << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct SolveArgs {
    std::string mdp;
    std::string algo = "vi";
    std::optional<std::size_t> m;
    std::uint64_t budget = 0;
    std::string budget_unit = "iterations";
    std::string cost_model = "lookahead";
    std::string init = "zero";
    double init_c = 1.0;
    std::uint64_t seed = 0;
    std::size_t track_state = 0;
    std::uint64_t thinning = 1;
    std::string out = ".";
};

int cmd_solve(const SolveArgs& args) {
    const auto mdp = davi::load_mdp(args.mdp);
    davi::RunConfig rc;
    rc.algorithm = davi::parse_algorithm(args.algo);
    rc.cost_model = davi::parse_cost_model(args.cost_model);
    rc.budget = args.budget_unit == "cost" ? davi::Budget::cost(args.budget) : davi::Budget::iterations(args.budget);
    rc.init = args.init == "negative" ? davi::InitSpec::constant_negative(args.init_c) : davi::InitSpec::zero();
    rc.seed = args.seed;
    rc.tracked_state = args.track_state;
    rc.thinning = args.thinning;
    if (rc.algorithm == davi::Algorithm::DAVI) {
        if (!args.m) throw davi::UsageError("--algo davi requires --m");
        rc.action_sampler = davi::ActionSubsetSampler::uniform(mdp.num_actions(), *args.m);
    }

    auto trace = davi::run(mdp, rc);
    // VI and AVI keep no policy; report the greedy one.
    if (!trace.final_pi) trace.final_pi = davi::greedy_policy(mdp, trace.final_v);

    const std::filesystem::path dir(args.out);
    std::filesystem::create_directories(dir);
    const auto trace_path = dir / "trace.csv";
    {
        std::ofstream out(trace_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + trace_path.string());
        davi::write_trace_csv(out, trace);
    }
    std::cout << "wrote " << trace_path.string() << "\n";
    if (mdp.num_states() <= davi::kSidecarMaxStates) {
        const auto sol_path = dir / "solution.json";
        std::ofstream out(sol_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + sol_path.string());
        out << davi::solution_to_json(trace).dump(2) << '\n';
        std::cout << "wrote " << sol_path.string() << "\n";
    }
    const double residual = davi::sup_distance(davi::apply_T(mdp, trace.final_v), trace.final_v);
    std::cout << "iterations " << trace.checkpoints.back().iteration << ", cost "
              << trace.checkpoints.back().cost << "\n"
              << "residual ||Tv - v||_inf = " << std::setprecision(17) << residual << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct BoundsArgs {
    davi::BoundInputs in;
    std::optional<std::uint64_t> l;
    std::optional<double> q_min, p_min, dist;
    std::string mdp;
    std::string format = "both";
};

void print_row(const std::string& name, const std::string& value) {
    std::cout << "  " << std::left << std::setw(28) << name << value << "\n";
}

std::string fmt(double x) {
    std::ostringstream s;
    s << std::setprecision(10) << x;
    return s.str();
}

int cmd_bounds(BoundsArgs args) {
    auto in = args.in;
    in.l = args.l;
    in.q_min = args.q_min;
    in.p_min = args.p_min;
    in.dist = args.dist;

    std::optional<davi::GapReport> gap;
    if (!args.mdp.empty()) {
        const auto mdp = davi::load_mdp(args.mdp);
        const auto oracle = davi::optimal_value_oracle(mdp, davi::kOracleTolerance);
        if (!in.dist) in.dist = davi::sup_norm(oracle.value);
        in.num_states = mdp.num_states();
        in.num_actions = mdp.num_actions();
        gap = davi::value_gap(mdp, oracle.value);
    }
    const auto report = davi::bound_report(in);

    auto j = davi::to_json(report);
    if (gap) {
        nlohmann::json g;
        g["global"] = gap->global ? nlohmann::json(*gap->global) : nlohmann::json("undefined");
        g["capture_radius"] = gap->capture_radius ? nlohmann::json(*gap->capture_radius) : nlohmann::json("undefined");
        if (!gap->note.empty()) g["note"] = gap->note;
        j["gap"] = std::move(g);
    }

    if (args.format == "table" || args.format == "both") {
        std::cout << "inputs\n";
        print_row("gamma", fmt(in.gamma));
        print_row("eps", fmt(in.eps));
        print_row("delta", fmt(in.delta));
        print_row("S / A / m", std::to_string(in.num_states) + " / " + std::to_string(in.num_actions) + " / " +
                                   std::to_string(in.m));
        print_row("||v* - v0|| bound", fmt(report.dist));
        print_row("q_min / p_min", fmt(report.q_min) + " / " + fmt(report.p_min));
        print_row("l", std::to_string(report.l));
        std::cout << "bounds\n";
        print_row("horizon H", fmt(report.horizon));
        print_row("iterations n (DAVI)", std::to_string(report.n_iterations));
        print_row("iterations n (async VI)", std::to_string(report.n_iterations_avi));
        print_row("tau", fmt(report.tau));
        print_row("m S tau", fmt(report.cost_magnitude));
        std::cout << "complexity magnitudes (constants dropped)\n";
        print_row("VI", report.table.vi ? fmt(*report.table.vi) : "undefined (" + report.table.vi_note + ")");
        print_row("asynchronous VI", fmt(report.table.avi));
        print_row("DAVI", fmt(report.table.davi));
        if (gap) {
            std::cout << "value gap at v*\n";
            print_row("gap", gap->global ? fmt(*gap->global) : "undefined");
            print_row("capture radius", gap->capture_radius ? fmt(*gap->capture_radius) : "undefined");
        }
    }
    if (args.format == "json" || args.format == "both") std::cout << j.dump(2) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
    std::string mdp;
    std::string policy;
    double eps = 0.0;
};

int cmd_verify(const VerifyArgs& args) {
    const auto mdp = davi::load_mdp(args.mdp);
    auto j = read_json_file(args.policy);
    if (j.is_object()) j = j.at("policy");
    if (!j.is_array()) throw davi::UsageError("policy file must hold an array or an object with 'policy'");
    const auto pi = j.get<davi::Policy>();
    mdp.check_policy(pi);

    const auto check = davi::check_epsilon_optimal(mdp, pi, args.eps);
    std::cout << "worst shortfall v*(s) - v_pi(s) = " << std::setprecision(17) << check.worst_shortfall
              << " at state " << check.worst_state << "\n";
    if (check.epsilon_optimal) {
        std::cout << "policy is " << args.eps << "-optimal\n";
        return kExitOk;
    }
    std::cout << "policy is NOT " << args.eps << "-optimal\n";
    return kExitNegative;
}

// ---------------------------------------------------------------------------

struct ExperimentArgs {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
};

int cmd_experiment(const ExperimentArgs& args) {
    auto config = davi::load_experiment_config(args.config);
    if (args.out) config.output_dir = *args.out;
    if (args.seed) config.base_seed = *args.seed;
    config.workers = args.workers;
    const auto result = davi::run_experiment(config);
    const auto paths = davi::emit_outputs(result, config);
    std::cout << paths.csv.string() << "\n" << paths.svg.string() << "\n" << paths.manifest.string() << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"davi_lab: value iteration, asynchronous VI and DAVI for finite MDPs"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Build a benchmark MDP and write it as JSON");
    generate->add_option("--config", gen.config, "Generator spec JSON (or an experiment config)")->required();
    generate->add_option("--out", gen.out, "Output MDP JSON path")->required();
    generate->add_option("--seed", gen.seed, "Override the generator seed");

    SolveArgs solve;
    auto* solve_cmd = app.add_subcommand("solve", "Run one solver and write its trace");
    solve_cmd->add_option("--mdp", solve.mdp, "MDP JSON file")->required();
    solve_cmd->add_option("--algo", solve.algo, "Algorithm")->check(CLI::IsMember({"vi", "avi", "davi"}));
    solve_cmd->add_option("--m", solve.m, "DAVI action subset size")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--budget", solve.budget, "Budget (see --budget-unit)")->required();
    solve_cmd->add_option("--budget-unit", solve.budget_unit, "Budget unit")
        ->check(CLI::IsMember({"iterations", "cost"}));
    solve_cmd->add_option("--cost-model", solve.cost_model, "Cost accounting")
        ->check(CLI::IsMember({"lookahead", "successor"}));
    solve_cmd->add_option("--init", solve.init, "Initial values")->check(CLI::IsMember({"zero", "negative"}));
    solve_cmd->add_option("--init-c", solve.init_c, "c for --init negative (v0 = -c)");
    solve_cmd->add_option("--seed", solve.seed, "Run seed");
    solve_cmd->add_option("--track-state", solve.track_state, "State whose value is traced");
    solve_cmd->add_option("--thinning", solve.thinning, "Record every k-th step")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--out", solve.out, "Output directory for trace.csv and solution.json");

    BoundsArgs bounds;
    auto* bounds_cmd = app.add_subcommand("bounds", "Evaluate horizon, iteration and complexity bounds");
    bounds_cmd->add_option("--gamma", bounds.in.gamma, "Discount in [0,1)");
    bounds_cmd->add_option("--eps", bounds.in.eps, "Target accuracy epsilon");
    bounds_cmd->add_option("--delta", bounds.in.delta, "Failure probability");
    bounds_cmd->add_option("-S,--states", bounds.in.num_states, "Number of states");
    bounds_cmd->add_option("-A,--actions", bounds.in.num_actions, "Number of actions");
    bounds_cmd->add_option("--m", bounds.in.m, "Action subset size");
    bounds_cmd->add_option("--l", bounds.l, "Contraction count l (default: smallest with gamma^l dist <= eps)");
    bounds_cmd->add_option("--dist", bounds.dist, "||v* - v0|| (default 1/(1-gamma) + ||v0||)");
    bounds_cmd->add_option("--v0-norm", bounds.in.v0_norm, "||v0|| used by the default distance bound");
    bounds_cmd->add_option("--q-min", bounds.q_min, "q_min (default m/(S A))");
    bounds_cmd->add_option("--p-min", bounds.p_min, "p_min (default 1/S)");
    bounds_cmd->add_option("--mdp", bounds.mdp, "Take S, A and ||v*|| from an MDP file and report its value gap");
    bounds_cmd->add_option("--format", bounds.format, "Output format")->check(CLI::IsMember({"table", "json", "both"}));

    VerifyArgs verify;
    auto* verify_cmd = app.add_subcommand("verify", "Check whether a policy is epsilon-optimal");
    verify_cmd->add_option("--mdp", verify.mdp, "MDP JSON file")->required();
    verify_cmd->add_option("--policy", verify.policy, "Policy JSON (array, or solve's solution.json)")->required();
    verify_cmd->add_option("--eps", verify.eps, "Epsilon >= 0");

    ExperimentArgs exp;
    exp.workers = default_workers();
    auto* exp_cmd = app.add_subcommand("experiment", "Run a multi-seed experiment and emit CSV, SVG and manifest");
    exp_cmd->add_option("--config", exp.config, "Experiment config JSON")->required();
    exp_cmd->add_option("--out", exp.out, "Override the output directory");
    exp_cmd->add_option("--seed", exp.seed, "Override the base seed");
    exp_cmd->add_option("--workers", exp.workers, "Concurrent runs (default $DAVI_LAB_THREADS or 1)")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*generate) return cmd_generate(gen);
        if (*solve_cmd) return cmd_solve(solve);
        if (*bounds_cmd) return cmd_bounds(bounds);
        if (*verify_cmd) return cmd_verify(verify);
        if (*exp_cmd) return cmd_experiment(exp);
    } catch (const davi::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const davi::ContractViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
