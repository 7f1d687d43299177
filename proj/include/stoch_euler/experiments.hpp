#pragma once

// Named experiments behind the command-line tool. Each runner reads a JSON
// config, writes CSV files (and optional SVG plots) into the output
// directory and returns the file list plus a short text report.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <json.hpp>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stoch_euler/ded.hpp"
#include "stoch_euler/errors.hpp"
#include "stoch_euler/linalg.hpp"
#include "stoch_euler/montecarlo.hpp"
#include "stoch_euler/ode.hpp"
#include "stoch_euler/random.hpp"
#include "stoch_euler/sed.hpp"
#include "stoch_euler/sed2.hpp"
#include "stoch_euler/stability.hpp"
#include "stoch_euler/svg.hpp"

namespace stoch_euler::experiments {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

/// Invalid or missing configuration field.
class ConfigError : public Error {
public:
    using Error::Error;
};

struct RunContext {
    fs::path out_dir = ".";
    std::uint64_t seed = kDefaultMasterSeed;
    std::size_t workers = 1;
    bool svg = false;
    bool drop_coarsest = false;
};

struct RunOutcome {
    std::vector<fs::path> files;
    std::vector<std::string> report;
    bool has_checks = false;
    bool checks_passed = true;
    json summary = json::object();

    void check(bool ok, const std::string& what) {
        has_checks = true;
        checks_passed = checks_passed && ok;
        report.push_back(std::string(ok ? "PASS " : "FAIL ") + what);
    }
};

// Config access.

/// Typed view of an experiment's JSON object; errors name the offending field.
class Config {
public:
    Config(json j, std::string command) : j_(std::move(j)), command_(std::move(command)) {
        if (!j_.is_object()) throw ConfigError(command_ + ": config must be a JSON object");
    }

    /// Rejects keys outside `allowed`.
    void only(const std::set<std::string>& allowed) const {
        for (const auto& [key, _] : j_.items()) {
            if (!allowed.count(key)) throw ConfigError(command_ + ": unknown config field '" + key + "'");
        }
    }

    [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key) && !j_[key].is_null(); }

    double number(const std::string& key, double def) const {
        if (!has(key)) return def;
        if (!j_[key].is_number()) throw ConfigError(command_ + ": field '" + key + "' must be a number");
        return j_[key].get<double>();
    }

    std::size_t count(const std::string& key, std::size_t def) const {
        if (!has(key)) return def;
        const json& v = j_[key];
        if (v.is_number_unsigned()) return v.get<std::size_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::size_t>(v.get<std::int64_t>());
        if (v.is_number_float() && v.get<double>() >= 0 && std::floor(v.get<double>()) == v.get<double>()) {
            return static_cast<std::size_t>(v.get<double>());
        }
        throw ConfigError(command_ + ": field '" + key + "' must be a nonnegative integer");
    }

    std::string text(const std::string& key, const std::string& def) const {
        if (!has(key)) return def;
        if (!j_[key].is_string()) throw ConfigError(command_ + ": field '" + key + "' must be a string");
        return j_[key].get<std::string>();
    }

    bool flag(const std::string& key, bool def) const {
        if (!has(key)) return def;
        if (!j_[key].is_boolean()) throw ConfigError(command_ + ": field '" + key + "' must be a boolean");
        return j_[key].get<bool>();
    }

    /// A number or an array of numbers.
    std::vector<double> numbers(const std::string& key, std::vector<double> def) const {
        if (!has(key)) return def;
        const json& v = j_[key];
        if (v.is_number()) return {v.get<double>()};
        if (!v.is_array()) throw ConfigError(command_ + ": field '" + key + "' must be a number list");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(command_ + ": field '" + key + "' must contain numbers only");
            out.push_back(e.get<double>());
        }
        if (out.empty()) throw ConfigError(command_ + ": field '" + key + "' must not be empty");
        return out;
    }

    /// A string or an array of strings.
    std::vector<std::string> texts(const std::string& key, std::vector<std::string> def) const {
        if (!has(key)) return def;
        const json& v = j_[key];
        if (v.is_string()) return {v.get<std::string>()};
        if (!v.is_array()) throw ConfigError(command_ + ": field '" + key + "' must be a string list");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) throw ConfigError(command_ + ": field '" + key + "' must contain strings only");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    [[nodiscard]] const std::string& command() const noexcept { return command_; }
    [[nodiscard]] const json& raw() const noexcept { return j_; }

    void require(bool ok, const std::string& key, const std::string& what) const {
        if (!ok) throw ConfigError(command_ + ": field '" + key + "' " + what);
    }

private:
    json j_;
    std::string command_;
};

// Default grids.

/// {1, 1.5, ..., 9.5} x 10^e for e = lo_exp..hi_exp-1, then 10^hi_exp.
inline std::vector<double> decade_grid(int lo_exp, int hi_exp) {
    std::vector<double> out;
    for (int e = lo_exp; e < hi_exp; ++e) {
        for (int m = 10; m < 100; m += 5) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%d.%de%d", m / 10, m % 10, e);
            out.push_back(std::stod(buf));
        }
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "1e%d", hi_exp);
    out.push_back(std::stod(buf));
    return out;
}

/// 2^lo, ..., 2^hi.
inline std::vector<double> dyadic_grid(int lo, int hi) {
    std::vector<double> out;
    for (int k = lo; k <= hi; ++k) out.push_back(std::ldexp(1.0, k));
    return out;
}

inline std::vector<double> arithmetic_grid(double start, double stop, double step) {
    std::vector<double> out;
    for (std::size_t i = 0;; ++i) {
        const double t = start + static_cast<double>(i) * step;
        if (t > stop + 1e-9 * step) break;
        out.push_back(t);
    }
    return out;
}

// Problems.

struct ProblemChoice {
    std::string name;
    OdeProblem problem;
    std::optional<LinearOde> linear;
    State u0;
};

/// Reads `problem`, `a`, `eigs` and `u0`. `diag` means u' = -diag(eigs) u.
inline ProblemChoice make_problem(const Config& c, const std::string& def = "linear1d") {
    ProblemChoice out;
    out.name = c.text("problem", def);
    if (out.name == "linear1d") {
        const double a = c.number("a", 1.0);
        out.linear = linear1d(a, 1.0);
    } else if (out.name == "oscillator") {
        out.linear = oscillator();
    } else if (out.name == "diag") {
        const auto eigs = c.numbers("eigs", {1.0, 2.0});
        out.linear = LinearOde{Matrix(eigs.size(), eigs.size(), std::vector<double>(eigs.size() * eigs.size(), 0.0)),
                               State(eigs.size(), 1.0)};
        for (std::size_t i = 0; i < eigs.size(); ++i) out.linear->a(i, i) = -eigs[i];
    } else if (out.name == "logistic") {
        out.problem = logistic();
        out.u0 = {0.25};
    } else {
        throw ConfigError(c.command() + ": field 'problem' must be one of linear1d, logistic, oscillator, diag");
    }
    if (out.linear) {
        out.u0 = out.linear->u0;
        out.problem = as_problem(*out.linear, out.name);
    }
    if (c.has("u0")) {
        out.u0 = c.numbers("u0", {});
        if (out.u0.size() != out.problem.dim) {
            throw ConfigError(c.command() + ": field 'u0' must have " + std::to_string(out.problem.dim) + " entries");
        }
        if (out.linear) out.linear->u0 = out.u0;
    }
    return out;
}

// Output.

inline std::string cell(double x) { return format_g17(x); }
inline std::string cell(std::size_t x) { return std::to_string(x); }
inline std::string cell(int x) { return std::to_string(x); }
inline std::string cell(bool x) { return x ? "true" : "false"; }
inline std::string cell(const std::string& x) { return x; }
inline std::string cell(const char* x) { return x; }

/// Comma-separated rows, doubles printed with %.17g.
class CsvWriter {
public:
    CsvWriter(fs::path path, const std::string& header) : path_(std::move(path)), out_(path_, std::ios::binary) {
        if (!out_) throw Error("cannot open " + path_.string() + " for writing");
        out_ << header << '\n';
    }

    template <class... Ts>
    void row(const Ts&... xs) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(xs), first = false), ...);
        out_ << '\n';
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

    [[nodiscard]] const fs::path& path() const noexcept { return path_; }

private:
    fs::path path_;
    std::ofstream out_;
};

inline std::uint64_t file_checksum(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return stoch_euler::detail::fnv1a64(bytes);
}

inline std::string hex64(std::uint64_t x) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

/// Writes `<command>_manifest.json` with the config echo, version, wall clock and output checksums.
inline fs::path write_manifest(const RunContext& ctx, const std::string& command, const json& config,
                               const RunOutcome& outcome, double wall_seconds) {
    json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["config"] = config;
    m["seed"] = ctx.seed;
    m["workers"] = ctx.workers;
    m["wall_clock_seconds"] = wall_seconds;
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m["finished_at"] = stamp;
    json files = json::array();
    for (const auto& f : outcome.files) {
        files.push_back({{"file", f.filename().string()},
                         {"bytes", fs::file_size(f)},
                         {"fnv1a64", hex64(file_checksum(f))}});
    }
    m["outputs"] = files;
    m["summary"] = outcome.summary;
    if (outcome.has_checks) m["checks_passed"] = outcome.checks_passed;
    const fs::path path = ctx.out_dir / (command + "_manifest.json");
    std::ofstream(path, std::ios::binary) << m.dump(2) << '\n';
    return path;
}

inline void add_svg(const RunContext& ctx, RunOutcome& out, const svg::LinePlot& plot, const std::string& name) {
    if (!ctx.svg) return;
    const fs::path p = ctx.out_dir / name;
    svg::write(plot, p.string());
    out.files.push_back(p);
}

// simulate

inline RunOutcome run_simulate(const Config& c, const RunContext& ctx) {
    c.only({"problem", "a", "eigs", "u0", "h", "t_end", "dynamics", "grid_points", "paths", "step"});
    const ProblemChoice pc = make_problem(c);
    const double h = c.number("h", 0.8);
    const double t_end = c.number("t_end", 10.0);
    const std::string dyn = c.text("dynamics", "sed");
    const std::size_t grid_points = c.count("grid_points", 1001);
    const std::size_t paths = c.count("paths", 1);
    const double step = c.number("step", 1e-3);
    c.require(h > 0, "h", "must be positive");
    c.require(t_end > 0, "t_end", "must be positive");
    c.require(grid_points >= 2, "grid_points", "must be >= 2");
    c.require(paths >= 1, "paths", "must be >= 1");
    c.require(step > 0, "step", "must be positive");
    c.require(dyn == "sed" || dyn == "sed2" || dyn == "ded", "dynamics", "must be sed, sed2 or ded");

    const std::size_t d = pc.problem.dim;
    std::string header = "t";
    for (std::size_t j = 1; j <= d; ++j) header += ",component_" + std::to_string(j);
    for (std::size_t j = 1; j <= d; ++j) header += ",vbar_" + std::to_string(j);

    RunOutcome out;
    out.summary["paths"] = json::array();
    std::vector<double> grid;
    for (std::size_t i = 0; i < grid_points; ++i) {
        grid.push_back(t_end * static_cast<double>(i) / static_cast<double>(grid_points - 1));
    }
    svg::LinePlot plot{"simulate: " + pc.name + " (" + dyn + ", h = " + format_g17(h) + ")", "t", "value", false,
                       false, {}};

    for (std::size_t p = 0; p < paths; ++p) {
        const std::string file = paths == 1 ? "simulate.csv" : "simulate_path_" + std::to_string(p + 1) + ".csv";
        RandomStream stream = derive_stream({ctx.seed, "simulate/" + dyn + "/" + pc.name, p});
        std::vector<double> times = grid;
        std::function<std::pair<State, State>(double)> eval;
        json info = {{"path", p + 1}, {"diverged", false}};
        std::optional<SedPath> sp;
        std::optional<Sed2Path> sp2;
        std::optional<DedPath> dp;
        try {
            if (dyn == "sed") {
                sp = simulate_sed(pc.problem, pc.u0, h, t_end, stream);
                times.insert(times.end(), sp->jump_times.begin(), sp->jump_times.end());
                eval = [&](double t) {
                    auto v = eval_sed(*sp, t);
                    return std::pair{v.v, v.vbar};
                };
                info["jumps"] = sp->segments() - 1;
            } else if (dyn == "sed2") {
                sp2 = simulate_sed2(pc.problem, pc.u0, h, t_end, stream);
                times.insert(times.end(), sp2->jump_times.begin(), sp2->jump_times.end());
                eval = [&](double t) {
                    auto v = eval_sed2(*sp2, t);
                    return std::pair{v.y1, v.ybar};
                };
                info["jumps"] = sp2->jump_times.size() - 1;
            } else if (pc.linear) {
                const LinearOde lin = *pc.linear;
                eval = [lin, h](double t) {
                    auto s = ded_linear(lin, h, t);
                    return std::pair{s.w, s.wbar};
                };
            } else {
                dp = ded_nonlinear(pc.problem, pc.u0, h, t_end, step);
                eval = [&](double t) {
                    auto s = (*dp)(t);
                    return std::pair{s.w, s.wbar};
                };
            }
        } catch (const DivergenceError& e) {
            info["diverged"] = true;
            info["diverged_jump"] = e.jump_index();
            info["diverged_time"] = e.time();
            out.report.push_back("path " + std::to_string(p + 1) + " diverged at t = " + format_g17(e.time()));
            out.summary["paths"].push_back(info);
            continue;
        }
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        CsvWriter csv(ctx.out_dir / file, header);
        svg::Series series{"path " + std::to_string(p + 1) + " component 1", {}, {}};
        for (double t : times) {
            const auto [v, vb] = eval(t);
            std::vector<std::string> cells{cell(t)};
            for (double x : v) cells.push_back(cell(x));
            for (double x : vb) cells.push_back(cell(x));
            csv.row(cells);
            series.x.push_back(t);
            series.y.push_back(v[0]);
        }
        plot.series.push_back(std::move(series));
        out.files.push_back(csv.path());
        out.summary["paths"].push_back(info);
    }
    if (pc.problem.exact) {
        svg::Series ex{"exact component 1", {}, {}};
        for (double t : grid) {
            ex.x.push_back(t);
            ex.y.push_back(pc.problem.exact(pc.u0, t)[0]);
        }
        plot.series.push_back(std::move(ex));
    }
    add_svg(ctx, out, plot, "simulate.svg");
    return out;
}

// ded-error

inline RunOutcome run_ded_error(const Config& c, const RunContext& ctx) {
    c.only({"a", "u0", "h_grid", "t_values"});
    const double a = c.number("a", 1.0);
    const double u0 = c.number("u0", 1.0);
    const auto hs = c.numbers("h_grid", decade_grid(-4, 0));
    const auto ts = c.numbers("t_values", {0.01, 0.1, 1.0});
    c.require(a > 0, "a", "must be positive");
    for (double h : hs) c.require(h > 0, "h_grid", "entries must be positive");
    for (double t : ts) c.require(t >= 0, "t_values", "entries must be >= 0");

    RunOutcome out;
    CsvWriter csv(ctx.out_dir / "ded_error.csv", "t,h,dist_w_u,dist_w_wbar,gap_bound");
    CsvWriter slopes(ctx.out_dir / "ded_error_slopes.csv", "t,quantity,slope,stderr,rows_used");
    svg::LinePlot plot{"deterministic Euler dynamics error", "h", "distance", true, true, {}};
    std::size_t bound_failures = 0;
    out.summary["slopes"] = json::array();
    for (double t : ts) {
        std::vector<double> du, dg;
        const double ut = u0 * std::exp(-a * t);
        for (double h : hs) {
            const Ded1d s = ded_analytic_1d(a, u0, h, t);
            const DedBoundReport r = ded_bound_check(linear1d(a, u0), h, t);
            du.push_back(std::abs(s.w - ut));
            dg.push_back(std::abs(s.w - s.wbar));
            if (!(dg.back() <= r.gap_bound * (1.0 + 1e-12))) ++bound_failures;
            csv.row(t, h, du.back(), dg.back(), r.gap_bound);
        }
        plot.series.push_back({"|w-u| t=" + format_g17(t), hs, du});
        plot.series.push_back({"|w-wbar| t=" + format_g17(t), hs, dg});
        for (const auto& [name, ys] : {std::pair{"w_minus_u", &du}, std::pair{"w_minus_wbar", &dg}}) {
            try {
                const SlopeFit f = fit_loglog_slope(hs, *ys, ctx.drop_coarsest);
                slopes.row(t, std::string(name), f.slope, f.slope_stderr, f.used);
                out.summary["slopes"].push_back({{"t", t}, {"quantity", name}, {"slope", f.slope}});
                out.report.push_back("t = " + format_g17(t) + " " + name + ": slope " + format_g17(f.slope) +
                                     " +- " + format_g17(f.slope_stderr));
            } catch (const FitError&) {
                out.report.push_back("t = " + format_g17(t) + " " + name + ": no slope (fewer than 3 positive rows)");
            }
        }
    }
    out.files = {csv.path(), slopes.path()};
    out.check(bound_failures == 0, "|w - wbar| <= sqrt(2) h |exp(tB)| |u0| on every row (" +
                                       std::to_string(bound_failures) + " failures)");
    add_svg(ctx, out, plot, "ded_error.svg");
    return out;
}

// rmste

inline RunOutcome run_rmste(const Config& c, const RunContext& ctx) {
    c.only({"problem", "a", "eigs", "u0", "eps_grid", "h_policies", "n", "dynamics"});
    const ProblemChoice pc = make_problem(c);
    if (!pc.linear) throw ConfigError("rmste: field 'problem' must name a linear problem");
    const auto eps = c.numbers("eps_grid", dyadic_grid(-8, 0));
    const auto policies = c.texts("h_policies", {"0.1", "1", "eps"});
    const std::size_t n = c.count("n", 100000);
    const auto dyns = c.texts("dynamics", {"first", "second"});
    c.require(n >= 100, "n", "must be >= 100");
    for (double e : eps) c.require(e > 0, "eps_grid", "entries must be positive");

    RunOutcome out;
    CsvWriter slopes(ctx.out_dir / "rmste_slopes.csv", "dynamics,h_policy,slope,stderr,rows_used");
    CsvWriter bounds(ctx.out_dir / "rmste_bounds.csv", "epsilon,h,mean_sq,mean_sq_bound");
    svg::LinePlot plot{"local RMS truncation error", "epsilon", "rmste", true, true, {}};
    const double a_norm = spectral_norm(pc.linear->a);
    const double u0_sq = dot(pc.u0, pc.u0);
    McConfig mc{ctx.seed, "rmste/" + pc.name, ctx.workers};
    out.summary["slopes"] = json::array();

    for (const std::string& dyn : dyns) {
        if (dyn != "first" && dyn != "second") throw ConfigError("rmste: field 'dynamics' entries must be first or second");
        const Dynamics order = dyn == "first" ? Dynamics::first_order : Dynamics::second_order;
        for (const std::string& pol : policies) {
            HPolicy policy = HPolicy::eps();
            if (pol != "eps") {
                double h = 0.0;
                try {
                    h = std::stod(pol);
                } catch (const std::exception&) {
                    throw ConfigError("rmste: field 'h_policies' entries must be numbers or 'eps'");
                }
                c.require(h > 0, "h_policies", "entries must be positive");
                policy = HPolicy::fixed(h);
            }
            const ConvergenceTable tab = estimate_rmste(*pc.linear, eps, policy, n, mc, order);
            const std::string file = "rmste_" + dyn + "_order_h-" + pol + ".csv";
            CsvWriter csv(ctx.out_dir / file, "epsilon,h,n,rmste,stderr,diverged");
            for (const auto& r : tab.rows) {
                csv.row(r.x, r.h, r.mean_sq.n, r.rms.value, r.rms.std_error, r.diverged);
                if (order == Dynamics::first_order) {
                    bounds.row(r.x, r.h, r.mean_sq.mean, rmste_theoretical_bound(a_norm, r.x, r.h) * u0_sq);
                }
            }
            out.files.push_back(csv.path());
            plot.series.push_back({dyn + " order, h = " + pol, tab.xs(), tab.values()});
            try {
                const SlopeFit f = fit_loglog_slope(tab, ctx.drop_coarsest);
                slopes.row(dyn, pol, f.slope, f.slope_stderr, f.used);
                out.summary["slopes"].push_back({{"dynamics", dyn}, {"h_policy", pol}, {"slope", f.slope}});
                out.report.push_back(dyn + " order, h = " + pol + ": slope " + format_g17(f.slope) + " +- " +
                                     format_g17(f.slope_stderr));
                if (pol == "eps") {
                    const double target = order == Dynamics::first_order ? 2.0 : 3.0;
                    const double tol = order == Dynamics::first_order ? 0.2 : 0.3;
                    out.check(std::abs(f.slope - target) <= tol,
                              dyn + " order slope with h = eps within " + format_g17(target) + " +- " + format_g17(tol));
                }
            } catch (const FitError& e) {
                out.report.push_back(dyn + " order, h = " + pol + ": " + e.what());
            }
        }
    }
    out.files.push_back(slopes.path());
    out.files.push_back(bounds.path());
    add_svg(ctx, out, plot, "rmste.svg");
    return out;
}

// stability

inline RunOutcome run_stability(const Config& c, const RunContext& ctx) {
    c.only({"problem", "a", "eigs", "u0", "h_grid", "t_grid", "n", "kappa_factor"});
    const ProblemChoice pc = make_problem(c);
    if (!pc.linear) throw ConfigError("stability: field 'problem' must name a linear problem");
    const bool osc = pc.name == "oscillator";
    const auto hs = c.numbers("h_grid", osc ? std::vector<double>{0.2, 0.6, 2.0 / 3.0, 0.7}
                                            : std::vector<double>{0.125, 0.25, 0.5, 1.0, 2.0});
    const auto ts = c.numbers("t_grid", osc ? arithmetic_grid(0, 600, 50) : arithmetic_grid(0, 60, 4));
    const std::size_t n = c.count("n", osc ? 100000 : 1000000);
    const double kf = c.number("kappa_factor", 0.99);
    c.require(n >= 100, "n", "must be >= 100");
    c.require(kf > 0 && kf < 1, "kappa_factor", "must lie in (0, 1)");
    for (double h : hs) c.require(h > 0, "h_grid", "entries must be positive");
    for (double t : ts) c.require(t >= 0, "t_grid", "entries must be >= 0");

    // The Foster-Lyapunov bound applies to u' = -Au with A symmetric positive definite.
    std::optional<std::vector<double>> spd;
    if (pc.name == "linear1d" || pc.name == "diag") {
        std::vector<double> lam;
        for (std::size_t i = 0; i < pc.linear->a.rows(); ++i) lam.push_back(-pc.linear->a(i, i));
        if (std::all_of(lam.begin(), lam.end(), [](double l) { return l > 0; })) spd = lam;
    }

    RunOutcome out;
    CsvWriter csv(ctx.out_dir / "moments.csv", "t,h,n,mean_sq,sd,stderr,diverged,bound_value");
    CsvWriter chk(ctx.out_dir / "stability_check.csv",
                  "t,h,mean_sq,lyapunov,lyapunov_stderr,exp_minus_2t,exp_minus_t_over_2h,bound_value,verdict");
    svg::LinePlot plot{"second moments: " + pc.name, "t", "mean |V(t)|^2", false, true, {}};
    McConfig mc{ctx.seed, "stability/" + pc.name, ctx.workers};
    const double u0_sq = dot(pc.u0, pc.u0);
    std::size_t violated = 0, checked = 0;
    out.summary["cells"] = json::array();

    for (double h : hs) {
        std::optional<double> kappa, c3;
        if (spd) {
            const double lmin = *std::min_element(spd->begin(), spd->end());
            const double lmax = *std::max_element(spd->begin(), spd->end());
            if (lmax * h < 1.0) {
                kappa = kf * std::min(2.0 * lmin, 1.0 / (2.0 * h));
                c3 = lyapunov_constants_multidim(*spd, h, *kappa);
            }
        }
        SecondMomentOptions opt;
        opt.include_companion = true;
        opt.c3 = c3.value_or(0.0);
        const auto cells = estimate_second_moment(*pc.linear, h, ts, n, mc, opt);
        svg::Series series{"h = " + format_g17(h), {}, {}};
        for (const MomentCell& m : cells) {
            const double bound = kappa ? std::exp(-*kappa * m.t) * u0_sq : std::numeric_limits<double>::quiet_NaN();
            csv.row(m.t, h, m.v_sq.n, m.v_sq.mean, m.v_sq.sample_sd, m.v_sq.std_error, m.diverged, bound);
            std::string verdict = "n/a";
            double lyap = std::numeric_limits<double>::quiet_NaN(), lyap_se = lyap;
            if (m.lyap) {
                lyap = m.lyap->mean;
                lyap_se = m.lyap->std_error;
            }
            if (kappa) {
                ++checked;
                const bool ok = m.lyap && lyap <= bound + 3.0 * lyap_se;
                verdict = ok ? "holds" : "violated";
                if (!ok) ++violated;
            } else if (m.diverged) {
                verdict = "diverged";
            }
            chk.row(m.t, h, m.v_sq.mean, lyap, lyap_se, std::exp(-2.0 * m.t) * u0_sq,
                    std::exp(-m.t / (2.0 * h)) * u0_sq, bound, verdict);
            series.x.push_back(m.t);
            series.y.push_back(m.v_sq.mean);
            out.summary["cells"].push_back({{"t", m.t}, {"h", h}, {"diverged", m.diverged}, {"verdict", verdict}});
        }
        plot.series.push_back(std::move(series));
    }
    out.files = {csv.path(), chk.path()};
    if (checked > 0) {
        out.check(violated == 0, "mean |V|^2 + c3 mean |V - Vbar|^2 <= exp(-kappa t) |u0|^2 + 3 SE (" +
                                     std::to_string(violated) + " of " + std::to_string(checked) + " cells violated)");
    }
    add_svg(ctx, out, plot, "stability.svg");
    return out;
}

// ded-oscillator

inline RunOutcome run_ded_oscillator(const Config& c, const RunContext& ctx) {
    c.only({"h_grid", "t_end", "grid_points"});
    const auto hs = c.numbers("h_grid", {0.2, 0.6, 2.0 / 3.0, 0.7});
    const double t_end = c.number("t_end", 40.0);
    const std::size_t np = c.count("grid_points", 801);
    c.require(t_end > 0, "t_end", "must be positive");
    c.require(np >= 2, "grid_points", "must be >= 2");
    for (double h : hs) c.require(h > 0, "h_grid", "entries must be positive");

    const LinearOde osc = oscillator();
    RunOutcome out;
    CsvWriter traj(ctx.out_dir / "ded_oscillator.csv", "h,t,w_1,w_2,wbar_1,wbar_2");
    CsvWriter eigs(ctx.out_dir / "ded_oscillator_eigs.csv", "h,max_re_eig_b,threshold,regime");
    svg::LinePlot plot{"deterministic Euler dynamics, oscillator", "t", "w_1", false, false, {}};
    const double thr = ded_stability_threshold(eigenvalues(osc.a));
    for (double h : hs) {
        const Matrix b = build_B(osc.a, h);
        svg::Series series{"h = " + format_g17(h), {}, {}};
        for (std::size_t i = 0; i < np; ++i) {
            const double t = t_end * static_cast<double>(i) / static_cast<double>(np - 1);
            const Vector x = mat_exp(b, t) * Vector{1.0, 0.0, 1.0, 0.0};
            traj.row(h, t, x[0], x[1], x[2], x[3]);
            series.x.push_back(t);
            series.y.push_back(x[0]);
        }
        plot.series.push_back(std::move(series));
        const StabilityReport r = stability_report(osc.a, h);
        std::string regime;
        bool ok;
        if (std::abs(h - thr) <= 1e-9) {
            regime = "boundary";
            ok = std::abs(r.max_re_b) <= 1e-10;
        } else if (h < thr) {
            regime = "stable";
            ok = r.max_re_b < -1e-6;
        } else {
            regime = "unstable";
            ok = r.max_re_b > 1e-6;
        }
        eigs.row(h, r.max_re_b, thr, regime);
        out.report.push_back("h = " + format_g17(h) + ": max Re eig(B) = " + format_g17(r.max_re_b));
        out.check(ok, "h = " + format_g17(h) + " behaves as " + regime);
    }
    out.files = {traj.path(), eigs.path()};
    out.summary["threshold"] = thr;
    add_svg(ctx, out, plot, "ded_oscillator.svg");
    return out;
}

// lyapunov

inline RunOutcome run_lyapunov(const Config& c, const RunContext& ctx) {
    c.only({"a", "eigs", "h", "kappa", "lattice", "lattice_range", "mc", "n", "t_grid"});
    const double h = c.number("h", 0.125);
    const std::size_t lattice = c.count("lattice", 101);
    const double range = c.number("lattice_range", 10.0);
    const bool mc = c.flag("mc", false);
    const std::size_t n = c.count("n", 100000);
    const auto ts = c.numbers("t_grid", arithmetic_grid(4, 32, 4));
    c.require(lattice >= 2, "lattice", "must be >= 2");
    c.require(range > 0, "lattice_range", "must be positive");

    std::vector<double> lam = c.has("eigs") ? c.numbers("eigs", {}) : std::vector<double>{c.number("a", 1.0)};
    const double lmin = *std::min_element(lam.begin(), lam.end());
    const double kappa = c.has("kappa") ? c.number("kappa", 0.0) : default_kappa(lmin, h);
    const double c3 = lam.size() == 1 ? lyapunov_constants(lam[0], h, kappa).c3
                                      : lyapunov_constants_multidim(lam, h, kappa);

    RunOutcome out;
    CsvWriter csv(ctx.out_dir / "lyapunov.csv", "lambda,h,kappa,c3,form_min_eigenvalue,form_psd,lattice_points,"
                                                "lattice_violations,max_excess");
    out.report.push_back("kappa = " + format_g17(kappa));
    out.report.push_back(std::string(lam.size() == 1 ? "c3 = " : "c3' = ") + format_g17(c3));
    out.summary["kappa"] = kappa;
    out.summary["c3"] = c3;
    const auto grid = square_lattice(lattice, -range, range);
    for (double l : lam) {
        const LyapunovSpec spec{l, h, kappa, 1.0, 0.0, c3};
        const FormCheck fc = lyapunov_form_check(l, spec);
        const LyapunovCheckReport lr = lyapunov_generator_inequality_check(l, spec, grid);
        csv.row(l, h, kappa, c3, fc.min_eigenvalue, fc.psd, lr.points, lr.violations, lr.max_excess);
        out.report.push_back("lambda = " + format_g17(l) + ": min eigenvalue of -kappa L - A_h L = " +
                             format_g17(fc.min_eigenvalue) + ", lattice violations " + std::to_string(lr.violations) +
                             " of " + std::to_string(lr.points));
        out.check(fc.psd, "lambda = " + format_g17(l) + ": -kappa L - A_h L positive semidefinite");
    }
    out.files.push_back(csv.path());

    if (mc) {
        c.require(n >= 100, "n", "must be >= 100");
        LinearOde p{Matrix(lam.size(), lam.size(), std::vector<double>(lam.size() * lam.size(), 0.0)),
                    State(lam.size(), 1.0)};
        for (std::size_t i = 0; i < lam.size(); ++i) p.a(i, i) = -lam[i];
        const double u0_sq = dot(p.u0, p.u0);
        SecondMomentOptions opt;
        opt.include_companion = true;
        opt.c3 = c3;
        const auto cells = estimate_second_moment(p, h, ts, n, {ctx.seed, "lyapunov/mc", ctx.workers}, opt);
        CsvWriter mcsv(ctx.out_dir / "lyapunov_mc.csv", "t,h,n,lyapunov,stderr,bound_value,verdict");
        std::size_t bad = 0;
        for (const auto& m : cells) {
            const double bound = std::exp(-kappa * m.t) * u0_sq;
            const bool ok = m.lyap && m.lyap->mean <= bound + 3.0 * m.lyap->std_error;
            if (!ok) ++bad;
            mcsv.row(m.t, h, m.v_sq.n, m.lyap ? m.lyap->mean : std::nan(""), m.lyap ? m.lyap->std_error : std::nan(""),
                     bound, std::string(ok ? "holds" : "violated"));
        }
        out.files.push_back(mcsv.path());
        out.check(bad == 0, "Monte Carlo bound holds within 3 SE (" + std::to_string(bad) + " of " +
                                std::to_string(cells.size()) + " cells violated)");
    }
    return out;
}

// simplex-test

inline RunOutcome run_simplex_test(const Config& c, const RunContext& ctx) {
    c.only({"k", "t", "h", "n", "alpha", "negative_control"});
    const auto ks = c.numbers("k", {1, 2, 3});
    const double t = c.number("t", 1.0);
    const double h = c.number("h", 0.5);
    const std::size_t n = c.count("n", 10000);
    const double alpha = c.number("alpha", 0.001);
    const bool neg = c.flag("negative_control", true);
    c.require(t > 0, "t", "must be positive");
    c.require(h > 0, "h", "must be positive");
    c.require(n >= 2, "n", "must be >= 2");
    for (double k : ks) c.require(k == 1 || k == 2 || k == 3, "k", "entries must be 1, 2 or 3");

    RunOutcome out;
    CsvWriter csv(ctx.out_dir / "simplex_test.csv", "k,sampler,n,statistic,p_value,verdict");
    McConfig mc{ctx.seed, "simplex-test", ctx.workers};
    for (double kd : ks) {
        const auto k = static_cast<std::size_t>(kd);
        const KsResult r = simplex_ks_test(k, t, h, n, mc, SimplexSampler::direct);
        const bool keep = r.p_value >= alpha;
        csv.row(k, std::string("uniform_simplex"), n, r.statistic, r.p_value, std::string(keep ? "not_rejected" : "rejected"));
        out.check(keep, "k = " + std::to_string(k) + ": conditioned vs simplex sampler not rejected (p = " +
                            format_g17(r.p_value) + ")");
        if (neg) {
            const KsResult q = simplex_ks_test(k, t, h, n, mc, SimplexSampler::full_simplex);
            const bool rej = q.p_value < alpha;
            csv.row(k, std::string("full_simplex_control"), n, q.statistic, q.p_value,
                    std::string(rej ? "rejected" : "not_rejected"));
            out.check(rej, "k = " + std::to_string(k) + ": negative control rejected (p = " + format_g17(q.p_value) + ")");
        }
    }
    out.files.push_back(csv.path());
    return out;
}

}  // namespace stoch_euler::experiments
