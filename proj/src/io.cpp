#include "lake/io.hpp"

#include <cmath>
#include <fmt/format.h>
#include <fmt/os.h>
#include <fstream>

namespace lake {

namespace {

// fmt's buffered file output; much faster than iostreams for large tables.
fmt::ostream open_csv(const std::filesystem::path& file, const char* header) {
    auto out = fmt::output_file(file.string());
    out.print("{}\n", header);
    return out;
}

nlohmann::json numbers(const std::vector<double>& v) { return nlohmann::json(v); }

// JSON has no infinities or NaN; they become null.
nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

std::string format_number(double x) { return fmt::format("{}", x); }

void write_solution_csv(const std::filesystem::path& file, const ValueSolution& s) {
    const Policy policy(s);
    auto out = open_csv(file, "x,V,dV,policy");
    for (int i = 0; i <= s.grid.n; ++i) {
        const double x = s.grid.node(i);
        const double dv = policy.derivative(x);
        out.print("{},{},{},{}\n", x, s.v[i], dv, -1.0 / dv);
    }
}

nlohmann::json solution_json(const ValueSolution& s) {
    const auto& p = s.params;
    nlohmann::json j;
    j["params"] = {{"b", p.b()}, {"c", p.c()}, {"rho", p.rho()}, {"sigma", p.sigma()}, {"rate", p.rate().name()}};
    j["grid"] = {{"l", s.grid.l}, {"n", s.grid.n}, {"dx", s.grid.dx}};
    j["right_bc"] = to_string(s.closure);
    j["residual_norm"] = s.residual_norm;
    j["newton_iters"] = s.newton_iters;
    j["fallback_guess"] = s.fallback_guess;
    j["V0"] = s.v.front();
    j["V_l"] = s.v.back();
    j["constants"] = {{"A", s.constants.A},
                      {"K", s.constants.K},
                      {"v0_upper", s.constants.v0_upper},
                      {"shift", s.constants.shift}};
    j["asymptotic_residual"] = s.asymptotic_residual;
    j["warnings"] = s.warnings;
    return j;
}

void write_density_csv(const std::filesystem::path& file, const InvariantDensity& d) {
    auto out = open_csv(file, "x,f,F,I");
    for (std::size_t k = 0; k < d.mesh.size(); ++k) {
        out.print("{},{},{},{}\n", d.mesh[k], d.f[k], d.F[k], d.I[k]);
    }
}

nlohmann::json density_json(const InvariantDensity& d) {
    const auto& g = d.diagnostics;
    nlohmann::json j;
    j["mesh"] = {{"lower_fraction", g.mesh_spec.lower_fraction},
                 {"log_points", g.mesh_spec.log_points},
                 {"extension_factor", g.mesh_spec.extension_factor},
                 {"extension_points", g.mesh_spec.extension_points},
                 {"size", g.mesh_size},
                 {"x_min", d.mesh.front()},
                 {"x_max", d.mesh.back()}};
    j["log_Z"] = d.log_Z;
    j["Z"] = finite_or_null(d.Z);
    j["normalization_error"] = g.normalization_error;
    j["tail"] = {{"fitted_exponent", g.tail_slope},
                 {"expected_exponent", g.tail_slope_expected},
                 {"fit_range", {g.tail_fit_lo, g.tail_fit_hi}}};
    j["left_limit"] = {{"x", g.left_limit_x}, {"x_phi", g.left_limit_value}, {"expected", g.left_limit_expected}};
    auto modes = nlohmann::json::array();
    for (std::size_t k = 0; k < d.modes.size(); ++k) {
        modes.push_back({{"location", d.modes[k]}, {"label", d.mode_label(k)}});
    }
    j["modes"] = modes;
    j["antimodes"] = numbers(d.antimodes);
    return j;
}

void write_sweep_csv(const std::filesystem::path& file, const SweepResult& r) {
    auto out = open_csv(file, "param,value,kind,location");
    const auto name = to_string(r.parameter);
    for (const auto& p : r.points) {
        for (double m : p.modes) out.print("{},{},mode,{}\n", name, p.value, m);
        for (double m : p.antimodes) out.print("{},{},antimode,{}\n", name, p.value, m);
    }
}

nlohmann::json sweep_json(const SweepResult& r) {
    nlohmann::json j;
    j["parameter"] = to_string(r.parameter);
    j["complete"] = r.complete();
    auto points = nlohmann::json::array();
    for (const auto& p : r.points) {
        nlohmann::json q = {{"value", p.value}, {"ok", p.ok}};
        if (p.ok) {
            q["modes"] = numbers(p.modes);
            q["antimodes"] = numbers(p.antimodes);
            q["residual_norm"] = p.residual_norm;
            q["newton_iters"] = p.newton_iters;
            q["V0"] = p.V0;
        } else {
            q["error"] = p.error_kind;
            q["message"] = p.error;
        }
        points.push_back(q);
    }
    j["points"] = points;
    return j;
}

void write_path_csv(const std::filesystem::path& file, const PathSample& path) {
    auto out = open_csv(file, "t,x");
    for (std::size_t k = 0; k < path.times.size(); ++k) out.print("{},{}\n", path.times[k], path.states[k]);
}

void write_escape_csv(const std::filesystem::path& file, const EscapeSample& e) {
    auto out = open_csv(file, "sample,time,normalized,censored");
    std::size_t next = 0;
    for (std::size_t k = 0; k < e.times.size(); ++k) {
        if (e.censored[k]) {
            out.print("{},{},,1\n", k, e.times[k]);
        } else {
            out.print("{},{},{},0\n", k, e.times[k], e.normalized[next++]);
        }
    }
}

nlohmann::json escape_json(const EscapeSample& e) {
    return {{"x_minus", e.x_minus},
            {"x_plus", e.x_plus},
            {"samples", e.times.size()},
            {"mean", e.mean},
            {"stderr", e.stderr_},
            {"ks_statistic", e.ks_statistic},
            {"censored", e.n_censored},
            {"horizon", e.horizon}};
}

nlohmann::json monte_carlo_json(const MonteCarloEstimate& e) {
    return {{"mean", e.mean}, {"stderr", e.stderr_}, {"bias", e.bias}, {"T_cutoff", e.T_cutoff}, {"paths", e.n_paths}};
}

nlohmann::json checks_json(const std::vector<Check>& checks) {
    auto out = nlohmann::json::array();
    for (const auto& c : checks) {
        out.push_back({{"name", c.name},
                       {"passed", c.passed},
                       {"value", finite_or_null(c.value)},
                       {"threshold", finite_or_null(c.threshold)},
                       {"detail", c.detail}});
    }
    return out;
}

nlohmann::json error_json(const Error& e) {
    nlohmann::json j{{"error", e.kind()}, {"message", e.what()}};
    if (const auto* x = dynamic_cast<const ConfigParseError*>(&e)) {
        j["key"] = x->key();
        j["line"] = x->line();
    } else if (const auto* x = dynamic_cast<const RecyclingAssumptionViolation*>(&e)) {
        j["check"] = x->check();
    } else if (const auto* x = dynamic_cast<const MonotonicityViolation*>(&e)) {
        j["worst_node"] = x->worst_node();
        j["worst_x"] = x->worst_x();
        j["minimal_n"] = x->minimal_n();
    } else if (const auto* x = dynamic_cast<const NonnegativeForwardDifference*>(&e)) {
        j["index"] = x->index();
    } else if (const auto* x = dynamic_cast<const ZeroPivot*>(&e)) {
        j["row"] = x->row();
    } else if (const auto* x = dynamic_cast<const MaxIterationsExceeded*>(&e)) {
        j["residual_norm"] = x->residual_norm();
    } else if (const auto* x = dynamic_cast<const DriftEvaluationOutOfRange*>(&e)) {
        j["x"] = x->x();
    }
    return j;
}

void write_json(const std::filesystem::path& file, const nlohmann::json& j) {
    std::ofstream out(file);
    out << j.dump(2) << '\n';
}

}  // namespace lake
