// stoch_euler: command-line runner for the named experiments.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "stoch_euler/experiments.hpp"

namespace ex = stoch_euler::experiments;
using nlohmann::json;

namespace {

enum class Kind { number, count, text, boolean, numbers, texts };

struct FlagSpec {
    std::string key;
    Kind kind;
    std::string help;
};

struct Command {
    std::string name;
    std::string description;
    std::vector<FlagSpec> flags;
    ex::RunOutcome (*run)(const ex::Config&, const ex::RunContext&);
};

const std::vector<FlagSpec> kProblemFlags = {
    {"problem", Kind::text, "linear1d, logistic, oscillator or diag"},
    {"a", Kind::number, "decay rate of u' = -a u"},
    {"eigs", Kind::numbers, "eigenvalues for the diag problem u' = -diag(eigs) u"},
    {"u0", Kind::numbers, "initial value"},
};

std::vector<FlagSpec> with_problem(std::vector<FlagSpec> rest) {
    std::vector<FlagSpec> out = kProblemFlags;
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

const std::vector<Command>& commands() {
    static const std::vector<Command> cmds = {
        {"simulate", "Sample paths of the stochastic or deterministic Euler dynamics",
         with_problem({{"h", Kind::number, "stepsize parameter"},
                       {"t_end", Kind::number, "final time"},
                       {"dynamics", Kind::text, "sed, sed2 or ded"},
                       {"grid_points", Kind::count, "uniform evaluation points (jump times are added)"},
                       {"paths", Kind::count, "number of independent paths"},
                       {"step", Kind::number, "RK4 step for nonlinear deterministic dynamics"}}),
         ex::run_simulate},
        {"ded-error", "Distances of the deterministic Euler dynamics to the ODE solution versus h",
         {{"a", Kind::number, "decay rate"},
          {"u0", Kind::number, "initial value"},
          {"h_grid", Kind::numbers, "stepsize parameters"},
          {"t_values", Kind::numbers, "evaluation times"}},
         ex::run_ded_error},
        {"rmste", "Monte Carlo local root mean square truncation error",
         with_problem({{"eps_grid", Kind::numbers, "epsilon values"},
                       {"h_policies", Kind::texts, "fixed h values or 'eps'"},
                       {"n", Kind::count, "samples per cell"},
                       {"dynamics", Kind::texts, "first and/or second"}}),
         ex::run_rmste},
        {"stability", "Long-time second moments and the Foster-Lyapunov bound",
         with_problem({{"h_grid", Kind::numbers, "stepsize parameters"},
                       {"t_grid", Kind::numbers, "evaluation times"},
                       {"n", Kind::count, "samples per cell"},
                       {"kappa_factor", Kind::number, "kappa as a fraction of its admissible supremum"}}),
         ex::run_stability},
        {"ded-oscillator", "Deterministic Euler trajectories for the damped oscillator",
         {{"h_grid", Kind::numbers, "stepsize parameters"},
          {"t_end", Kind::number, "final time"},
          {"grid_points", Kind::count, "evaluation points"}},
         ex::run_ded_oscillator},
        {"lyapunov", "Foster-Lyapunov constants and quadratic-form check",
         {{"a", Kind::number, "decay rate (one-dimensional case)"},
          {"eigs", Kind::numbers, "eigenvalues of a symmetric positive definite matrix"},
          {"h", Kind::number, "stepsize parameter"},
          {"kappa", Kind::number, "decay rate of the bound"},
          {"lattice", Kind::count, "lattice points per axis"},
          {"lattice_range", Kind::number, "lattice half-width"},
          {"mc", Kind::boolean, "also run the Monte Carlo bound check"},
          {"n", Kind::count, "samples per cell for the Monte Carlo check"},
          {"t_grid", Kind::numbers, "evaluation times for the Monte Carlo check"}},
         ex::run_lyapunov},
        {"simplex-test", "Two-sample KS test of jump times conditioned on the jump count",
         {{"k", Kind::numbers, "jump counts (1, 2 or 3)"},
          {"t", Kind::number, "time horizon"},
          {"h", Kind::number, "stepsize parameter"},
          {"n", Kind::count, "samples per arm"},
          {"alpha", Kind::number, "significance level"},
          {"negative_control", Kind::boolean, "also run the mismatched sampler"}},
         ex::run_simplex_test},
    };
    return cmds;
}

std::string flag_name(const std::string& key) {
    std::string out = "--";
    for (char c : key) out += c == '_' ? '-' : c;
    return out;
}

double parse_double(const std::string& s, const std::string& key) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') throw ex::ConfigError(flag_name(key) + ": '" + s + "' is not a number");
    return v;
}

/// Values given on the command line for one subcommand.
struct FlagValues {
    std::map<std::string, std::string> scalar;
    std::map<std::string, std::vector<std::string>> list;
    std::map<std::string, bool> boolean;
    std::map<std::string, CLI::Option*> opts;

    void attach(CLI::App* sub, const FlagSpec& f) {
        const std::string name = flag_name(f.key);
        switch (f.kind) {
            case Kind::boolean:
                opts[f.key] = sub->add_flag(name + ",!--no-" + name.substr(2), boolean[f.key], f.help);
                break;
            case Kind::numbers:
            case Kind::texts:
                opts[f.key] = sub->add_option(name, list[f.key], f.help + " (space or comma separated)")
                                  ->delimiter(',')
                                  ->expected(1, -1)
                                  ->type_name(f.kind == Kind::numbers ? "FLOAT" : "TEXT");
                break;
            default:
                opts[f.key] = sub->add_option(name, scalar[f.key], f.help)
                                  ->type_name(f.kind == Kind::number  ? "FLOAT"
                                              : f.kind == Kind::count ? "UINT"
                                                                      : "TEXT");
        }
    }

    void merge_into(json& cfg, const FlagSpec& f) const {
        if (opts.at(f.key)->count() == 0) return;
        switch (f.kind) {
            case Kind::number:
                cfg[f.key] = parse_double(scalar.at(f.key), f.key);
                break;
            case Kind::count: {
                const double v = parse_double(scalar.at(f.key), f.key);
                if (v < 0 || v != static_cast<double>(static_cast<std::uint64_t>(v))) {
                    throw ex::ConfigError(flag_name(f.key) + ": must be a nonnegative integer");
                }
                cfg[f.key] = static_cast<std::uint64_t>(v);
                break;
            }
            case Kind::text:
                cfg[f.key] = scalar.at(f.key);
                break;
            case Kind::boolean:
                cfg[f.key] = boolean.at(f.key);
                break;
            case Kind::numbers: {
                json arr = json::array();
                for (const auto& s : list.at(f.key)) arr.push_back(parse_double(s, f.key));
                cfg[f.key] = arr;
                break;
            }
            case Kind::texts:
                cfg[f.key] = list.at(f.key);
                break;
        }
    }
};

json read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ex::ConfigError("--config: cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ex::ConfigError("--config: " + path + ": " + e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-timestep Euler dynamics: simulation and Monte Carlo experiments"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", ex::kVersion);

    std::string seed_text;
    std::size_t workers = 0;
    std::string out_dir = ".";
    std::string config_path;
    bool svg = false;
    bool drop_coarsest = false;
    auto* seed_opt = app.add_option("--seed", seed_text, "master seed (decimal or 0x hex), default 0x5EED0001");
    auto* workers_opt = app.add_option("--workers", workers, "worker threads, 0 = hardware concurrency");
    auto* out_opt = app.add_option("--out-dir", out_dir, "output directory (created if missing)");
    app.add_option("--config", config_path, "JSON config file; flags override its values");
    auto* svg_opt = app.add_flag("--svg", svg, "also write SVG plots");
    auto* drop_opt = app.add_flag("--drop-coarsest", drop_coarsest, "exclude the largest grid value from slope fits");

    std::vector<FlagValues> values(commands().size());
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < commands().size(); ++i) {
        const Command& c = commands()[i];
        CLI::App* sub = app.add_subcommand(c.name, c.description);
        for (const auto& f : c.flags) values[i].attach(sub, f);
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::size_t which = 0;
    while (!subs[which]->parsed()) ++which;
    const Command& cmd = commands()[which];

    json config = json::object();
    ex::RunContext ctx;
    try {
        if (!config_path.empty()) config = read_config_file(config_path);
        if (!config.is_object()) throw ex::ConfigError("--config: top level must be a JSON object");
        // Global settings may also come from the file.
        auto take = [&](const char* key, auto apply) {
            if (config.contains(key)) {
                apply(config[key]);
                config.erase(key);
            }
        };
        try {
            take("seed", [&](const json& v) {
                ctx.seed = v.is_string() ? std::stoull(v.get<std::string>(), nullptr, 0) : v.get<std::uint64_t>();
            });
            take("workers", [&](const json& v) { ctx.workers = v.get<std::size_t>(); });
            take("out_dir", [&](const json& v) { ctx.out_dir = v.get<std::string>(); });
            take("svg", [&](const json& v) { ctx.svg = v.get<bool>(); });
            take("drop_coarsest", [&](const json& v) { ctx.drop_coarsest = v.get<bool>(); });
        } catch (const std::exception& e) {
            throw ex::ConfigError(std::string("--config: bad global setting: ") + e.what());
        }
        if (seed_opt->count()) {
            try {
                std::size_t used = 0;
                ctx.seed = std::stoull(seed_text, &used, 0);
                if (used != seed_text.size()) throw std::invalid_argument(seed_text);
            } catch (const std::exception&) {
                throw ex::ConfigError("--seed: '" + seed_text + "' is not an unsigned 64-bit integer");
            }
        }
        if (workers_opt->count()) ctx.workers = workers;
        if (out_opt->count()) ctx.out_dir = out_dir;
        if (svg_opt->count()) ctx.svg = svg;
        if (drop_opt->count()) ctx.drop_coarsest = drop_coarsest;
        ctx.workers = stoch_euler::resolve_workers(ctx.workers);
        for (const auto& f : cmd.flags) values[which].merge_into(config, f);
        std::filesystem::create_directories(ctx.out_dir);

        const auto start = std::chrono::steady_clock::now();
        ex::RunOutcome outcome = cmd.run(ex::Config(config, cmd.name), ctx);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const auto manifest = ex::write_manifest(ctx, cmd.name, config, outcome, wall);

        for (const auto& line : outcome.report) std::cout << line << '\n';
        for (const auto& f : outcome.files) std::cout << "wrote " << f.string() << '\n';
        std::cout << "manifest " << manifest.string() << '\n';
        return outcome.has_checks && !outcome.checks_passed ? 4 : 0;
    } catch (const ex::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const stoch_euler::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 1;
    }
}
