// Command-line front end: solve, density, sweep, simulate, escape, verify.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fmt/format.h>
#include <iostream>
#include <map>

#include "lake/config.hpp"
#include "lake/io.hpp"

#ifndef LAKE_VERSION
#define LAKE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace lake;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitChecksFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitPartialSweep = 4;

// Flag name -> config key. Flags and file keys share one setter path.
const std::vector<std::pair<std::string, std::string>> kFlags{
    {"--b", "params.b"},
    {"--c", "params.c"},
    {"--rho", "params.rho"},
    {"--sigma", "params.sigma"},
    {"--rate", "params.rate"},
    {"--rate-center", "params.rate.center"},
    {"--rate-slope", "params.rate.slope"},
    {"--rate-scale", "params.rate.scale"},
    {"--rate-threshold", "params.rate.threshold"},
    {"--l", "grid.l"},
    {"--n", "grid.n"},
    {"--right-bc", "grid.right_bc"},
    {"--tol", "solver.tol"},
    {"--max-iter", "solver.max_iter"},
    {"--dt", "sim.dt"},
    {"--horizon", "sim.horizon"},
    {"--seed", "sim.seed"},
    {"--paths", "sim.paths"},
    {"--record-every", "sim.record_every"},
    {"--x0", "sim.x0"},
    {"--samples", "escape.samples"},
    {"--escape-horizon", "escape.horizon"},
    {"--verify-paths", "verify.paths"},
    {"--name", "sweep.name"},
    {"--start", "sweep.start"},
    {"--stop", "sweep.stop"},
    {"--count", "sweep.count"},
    {"--out", "output.dir"},
    {"--jobs", "run.jobs"},
};

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Run {
    RunConfig cfg;
    fs::path dir;
    nlohmann::json files = nlohmann::json::array();
    nlohmann::json timings = nlohmann::json::object();
    std::vector<std::string> warnings;

    fs::path file(const std::string& name) {
        files.push_back(name);
        return dir / name;
    }
};

ValueSolution solve_for(Run& run, const ValidatedParams& p) {
    Timer t;
    const double l = run.cfg.l.value_or(default_right_endpoint(p));
    auto s = solve(build_grid(p, l, run.cfg.n), p, run.cfg.solver_options());
    run.timings["solve"] = t.seconds();
    run.warnings.insert(run.warnings.end(), s.warnings.begin(), s.warnings.end());
    return s;
}

InvariantDensity density_for(Run& run, const ValueSolution& s) {
    Timer t;
    auto d = invariant_density(s);
    run.timings["density"] = t.seconds();
    return d;
}

int cmd_solve(Run& run, const ValidatedParams& p) {
    const auto s = solve_for(run, p);
    write_solution_csv(run.file("solution.csv"), s);
    write_json(run.file("solution.json"), solution_json(s));
    fmt::print("V(0) = {}  residual {:.2e}  iterations {}\n", s.v.front(), s.residual_norm, s.newton_iters);
    return kExitOk;
}

int cmd_density(Run& run, const ValidatedParams& p) {
    const auto s = solve_for(run, p);
    const auto d = density_for(run, s);
    write_density_csv(run.file("density.csv"), d);
    auto j = density_json(d);
    j["solution"] = solution_json(s);
    write_json(run.file("density.json"), j);
    for (std::size_t k = 0; k < d.modes.size(); ++k) fmt::print("mode {} ({})\n", d.modes[k], d.mode_label(k));
    for (double m : d.antimodes) fmt::print("antimode {}\n", m);
    return kExitOk;
}

int cmd_sweep(Run& run, const ValidatedParams& p) {
    SweepOptions opts;
    opts.n = run.cfg.n;
    opts.l = run.cfg.l;
    opts.solver = run.cfg.solver_options();
    Timer t;
    const auto r = bifurcation_sweep(p.params(), run.cfg.sweep_spec(), opts, run.cfg.jobs);
    run.timings["sweep"] = t.seconds();
    write_sweep_csv(run.file("sweep.csv"), r);
    write_json(run.file("sweep.json"), sweep_json(r));
    int failed = 0;
    for (const auto& q : r.points) {
        if (q.ok) {
            fmt::print("{} = {}: {} mode(s), {} antimode(s)\n", to_string(r.parameter), q.value, q.modes.size(),
                       q.antimodes.size());
        } else {
            ++failed;
            fmt::print(stderr, "{} = {}: {} ({})\n", to_string(r.parameter), q.value, q.error_kind, q.error);
        }
    }
    return failed ? kExitPartialSweep : kExitOk;
}

int cmd_simulate(Run& run, const ValidatedParams& p) {
    const auto s = solve_for(run, p);
    const auto cfg = run.cfg.sim_config();
    Timer t;
    nlohmann::json summary{{"seed", cfg.seed}, {"x0", run.cfg.x0}, {"dt", cfg.dt}, {"horizon", cfg.horizon}};
    auto paths = nlohmann::json::array();
    for (int k = 0; k < cfg.n_paths; ++k) {
        const auto path = simulate_path(s, cfg, run.cfg.x0, static_cast<std::uint64_t>(k));
        const std::string name = cfg.n_paths == 1 ? "path.csv" : fmt::format("path_{:04d}.csv", k);
        write_path_csv(run.file(name), path);
        const auto [lo, hi] = std::minmax_element(path.states.begin(), path.states.end());
        paths.push_back({{"file", name}, {"final", path.states.back()}, {"min", *lo}, {"max", *hi}});
    }
    run.timings["simulate"] = t.seconds();
    summary["paths"] = paths;
    write_json(run.file("summary.json"), summary);
    return kExitOk;
}

int cmd_escape(Run& run, const ValidatedParams& p) {
    const auto s = solve_for(run, p);
    const auto d = density_for(run, s);
    auto cfg = run.cfg.sim_config();
    cfg.horizon = run.cfg.escape_horizon.value_or(default_escape_horizon(cfg));
    Timer t;
    const auto e = escape_times(s, d, cfg, run.cfg.samples, Execution::Parallel, run.cfg.jobs);
    run.timings["escape"] = t.seconds();
    write_escape_csv(run.file("escape.csv"), e);
    auto summary = escape_json(e);
    summary["config"] = {{"dt", cfg.dt}, {"seed", cfg.seed}, {"horizon", cfg.horizon}};
    write_json(run.file("summary.json"), summary);
    fmt::print("mean escape time {} +- {}  KS {:.4f}  censored {}\n", e.mean, e.stderr_, e.ks_statistic,
               e.n_censored);
    return kExitOk;
}

int cmd_verify(Run& run, const ValidatedParams& p) {
    VerifyOptions opts;
    opts.n = run.cfg.n;
    opts.l = run.cfg.l;
    opts.solver = run.cfg.solver_options();
    opts.sim = run.cfg.sim_config();
    opts.sim.n_paths = run.cfg.verify_paths;
    opts.x0 = run.cfg.x0;
    opts.eps = run.cfg.mc_eps;
    opts.jobs = run.cfg.jobs;
    Timer t;
    const auto report = run_verification(p.params(), opts);
    run.timings["verify"] = t.seconds();
    write_json(run.file("verify.json"), {{"all_passed", report.all_passed()}, {"checks", checks_json(report.checks)}});
    for (const auto& c : report.checks) {
        fmt::print("{} {}: {} (threshold {})\n", c.passed ? "PASS" : "FAIL", c.name, c.value, c.threshold);
    }
    return report.all_passed() ? kExitOk : kExitChecksFailed;
}

int dispatch(Run& run) {
    const auto p = validate_params(run.cfg.lake_params());
    run.warnings = p.warnings();
    const auto& c = run.cfg.command;
    if (c == "solve") return cmd_solve(run, p);
    if (c == "density") return cmd_density(run, p);
    if (c == "sweep") return cmd_sweep(run, p);
    if (c == "simulate") return cmd_simulate(run, p);
    if (c == "escape") return cmd_escape(run, p);
    return cmd_verify(run, p);
}

void write_manifest(Run& run, int status, double wall) {
    nlohmann::json m;
    m["tool"] = "lake";
    m["version"] = LAKE_VERSION;
    m["command"] = run.cfg.command;
    m["config"] = to_json(run.cfg);
    m["files"] = run.files;
    m["timings"] = run.timings;
    m["timings"]["total"] = wall;
    m["warnings"] = run.warnings;
    m["exit_code"] = status;
    write_json(run.dir / "manifest.json", m);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic shallow-lake control: value function, invariant density, paths and escape times"};
    app.set_version_flag("--version", LAKE_VERSION);
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_file;
    app.add_option("--config", config_file, "Flat key = value config file");
    std::map<std::string, std::string> raw;
    std::map<std::string, CLI::Option*> options;
    for (const auto& [flag, key] : kFlags) {
        options[flag] = app.add_option(flag, raw[flag], "Sets " + key);
    }
    std::string sweep;
    auto* sweep_opt = app.add_option("--sweep", sweep, "Sweep as name:start:stop:count, name in {sigma, c, rho}");

    const std::vector<std::pair<std::string, std::string>> commands{
        {"solve", "Solve the HJB equation; writes solution.csv and solution.json"},
        {"density", "Invariant density and its extrema; writes density.csv and density.json"},
        {"sweep", "Bifurcation sweep over sigma, c or rho; writes sweep.csv and sweep.json"},
        {"simulate", "Sample paths of the optimally controlled lake; writes path.csv"},
        {"escape", "Escape times between the two attractors; writes escape.csv and summary.json"},
        {"verify", "Run the proven-bound, density and Monte Carlo checks; writes verify.json"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    Run run;
    const Timer wall;
    int status = kExitOk;
    try {
        run.cfg.command = app.get_subcommands().front()->get_name();
        if (!config_file.empty()) {
            for (const auto& e : read_config_file(config_file)) apply_entry(run.cfg, e);
        }
        for (const auto& [flag, key] : kFlags) {
            if (options[flag]->count() > 0) apply_entry(run.cfg, {key, raw[flag], 0, flag});
        }
        if (sweep_opt->count() > 0) apply_sweep_shorthand(run.cfg, sweep);
    } catch (const Error& e) {
        std::cerr << error_json(e).dump(2) << '\n';
        return kExitConfig;
    }

    run.dir = run.cfg.out;
    try {
        fs::create_directories(run.dir);
    } catch (const fs::filesystem_error& e) {
        std::cerr << nlohmann::json{{"error", "OutputDirectoryError"}, {"message", e.what()}}.dump(2) << '\n';
        return kExitConfig;
    }

    try {
        status = dispatch(run);
    } catch (const Error& e) {
        const auto j = error_json(e);
        write_json(run.file("error.json"), j);
        std::cerr << j.dump(2) << '\n';
        status = dynamic_cast<const ConfigError*>(&e) ? kExitConfig : kExitNumerical;
    }
    for (const auto& w : run.warnings) fmt::print(stderr, "warning: {}\n", w);
    write_manifest(run, status, wall.seconds());
    return status;
}
