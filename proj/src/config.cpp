#include "lake/config.hpp"

#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "lake/errors.hpp"

namespace lake {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string where(const ConfigEntry& e) {
    return e.line > 0 ? fmt::format("{}:{}", e.source, e.line) : e.source;
}

[[noreturn]] void bad_value(const ConfigEntry& e, const std::string& expected) {
    throw ConfigParseError(
        fmt::format("{}: key '{}' has value '{}', expected {}", where(e), e.key, e.value, expected), e.key,
        e.line);
}

template <class T>
T parse_number(const ConfigEntry& e, const std::string& expected) {
    T out{};
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last) bad_value(e, expected);
    return out;
}

double as_double(const ConfigEntry& e) { return parse_number<double>(e, "a number"); }
int as_int(const ConfigEntry& e) { return parse_number<int>(e, "an integer"); }

std::string one_of(const ConfigEntry& e, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed) {
        if (e.value == a) return e.value;
    }
    std::string list;
    for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
    bad_value(e, "one of " + list);
}

using Setter = std::function<void(RunConfig&, const ConfigEntry&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table{
        {"params.b", [](RunConfig& c, const ConfigEntry& e) { c.b = as_double(e); }},
        {"params.c", [](RunConfig& c, const ConfigEntry& e) { c.c = as_double(e); }},
        {"params.rho", [](RunConfig& c, const ConfigEntry& e) { c.rho = as_double(e); }},
        {"params.sigma", [](RunConfig& c, const ConfigEntry& e) { c.sigma = as_double(e); }},
        {"params.rate",
         [](RunConfig& c, const ConfigEntry& e) { c.rate = one_of(e, {"standard", "tanh", "step"}); }},
        {"params.rate.center", [](RunConfig& c, const ConfigEntry& e) { c.rate_center = as_double(e); }},
        {"params.rate.slope", [](RunConfig& c, const ConfigEntry& e) { c.rate_slope = as_double(e); }},
        {"params.rate.scale", [](RunConfig& c, const ConfigEntry& e) { c.rate_scale = as_double(e); }},
        {"params.rate.threshold", [](RunConfig& c, const ConfigEntry& e) { c.rate_threshold = as_double(e); }},
        {"grid.l", [](RunConfig& c, const ConfigEntry& e) { c.l = as_double(e); }},
        {"grid.n", [](RunConfig& c, const ConfigEntry& e) { c.n = as_int(e); }},
        {"grid.right_bc", [](RunConfig& c, const ConfigEntry& e) { c.right_bc = one_of(e, {"slope", "value"}); }},
        {"solver.tol", [](RunConfig& c, const ConfigEntry& e) { c.tol = as_double(e); }},
        {"solver.max_iter", [](RunConfig& c, const ConfigEntry& e) { c.max_iter = as_int(e); }},
        {"sim.dt", [](RunConfig& c, const ConfigEntry& e) { c.dt = as_double(e); }},
        {"sim.horizon", [](RunConfig& c, const ConfigEntry& e) { c.horizon = as_double(e); }},
        {"sim.seed",
         [](RunConfig& c, const ConfigEntry& e) { c.seed = parse_number<std::uint64_t>(e, "an unsigned integer"); }},
        {"sim.paths", [](RunConfig& c, const ConfigEntry& e) { c.paths = as_int(e); }},
        {"sim.record_every", [](RunConfig& c, const ConfigEntry& e) { c.record_every = as_int(e); }},
        {"sim.x0", [](RunConfig& c, const ConfigEntry& e) { c.x0 = as_double(e); }},
        {"sim.mc_eps", [](RunConfig& c, const ConfigEntry& e) { c.mc_eps = as_double(e); }},
        {"escape.samples", [](RunConfig& c, const ConfigEntry& e) { c.samples = as_int(e); }},
        {"escape.horizon", [](RunConfig& c, const ConfigEntry& e) { c.escape_horizon = as_double(e); }},
        {"sweep.name", [](RunConfig& c, const ConfigEntry& e) { c.sweep_name = one_of(e, {"sigma", "c", "rho"}); }},
        {"sweep.start", [](RunConfig& c, const ConfigEntry& e) { c.sweep_start = as_double(e); }},
        {"sweep.stop", [](RunConfig& c, const ConfigEntry& e) { c.sweep_stop = as_double(e); }},
        {"sweep.count", [](RunConfig& c, const ConfigEntry& e) { c.sweep_count = as_int(e); }},
        {"verify.paths", [](RunConfig& c, const ConfigEntry& e) { c.verify_paths = as_int(e); }},
        {"output.dir", [](RunConfig& c, const ConfigEntry& e) { c.out = e.value; }},
        {"run.jobs", [](RunConfig& c, const ConfigEntry& e) { c.jobs = as_int(e); }},
    };
    return table;
}

}  // namespace

LakeParams RunConfig::lake_params() const {
    RecyclingRate r = RecyclingRate::standard();
    if (rate == "tanh") r = RecyclingRate::tanh_shifted(rate_center, rate_slope, rate_scale);
    if (rate == "step") r = RecyclingRate::step(rate_threshold);
    return {b, c, rho, sigma, r};
}

SolverOptions RunConfig::solver_options() const { return {tol, max_iter, right_closure_from_string(right_bc)}; }

SimConfig RunConfig::sim_config() const { return {dt, horizon, seed, paths, record_every}; }

SweepSpec RunConfig::sweep_spec() const {
    return {sweep_parameter_from_string(sweep_name), linspace(sweep_start, sweep_stop, sweep_count)};
}

std::vector<ConfigEntry> parse_config_text(const std::string& text, const std::string& source) {
    std::vector<ConfigEntry> out;
    std::map<std::string, int> seen;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigParseError(fmt::format("{}:{}: expected 'key = value', got '{}'", source, line, body),
                                   body, line);
        }
        ConfigEntry e{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line, source};
        if (e.key.empty()) {
            throw ConfigParseError(fmt::format("{}:{}: missing key before '='", source, line), "", line);
        }
        if (const auto it = seen.find(e.key); it != seen.end()) {
            throw ConfigParseError(
                fmt::format("{}:{}: key '{}' already set on line {}", source, line, e.key, it->second), e.key,
                line);
        }
        seen[e.key] = line;
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<ConfigEntry> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigParseError(fmt::format("cannot read config file '{}'", path), "", 0);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path);
}

void apply_entry(RunConfig& cfg, const ConfigEntry& entry) {
    for (const auto& [key, set] : setters()) {
        if (key == entry.key) {
            set(cfg, entry);
            return;
        }
    }
    throw ConfigParseError(fmt::format("{}: unknown key '{}'", where(entry), entry.key), entry.key, entry.line);
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& [key, set] : setters()) out.push_back(key);
        return out;
    }();
    return keys;
}

void apply_sweep_shorthand(RunConfig& cfg, const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream in(text);
    std::string part;
    while (std::getline(in, part, ':')) parts.push_back(part);
    if (parts.size() != 4) {
        throw ConfigParseError(fmt::format("--sweep expects name:start:stop:count, got '{}'", text), "sweep", 0);
    }
    const std::string source = "--sweep";
    apply_entry(cfg, {"sweep.name", parts[0], 0, source});
    apply_entry(cfg, {"sweep.start", parts[1], 0, source});
    apply_entry(cfg, {"sweep.stop", parts[2], 0, source});
    apply_entry(cfg, {"sweep.count", parts[3], 0, source});
}

nlohmann::json to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["command"] = cfg.command;
    j["params"] = {{"b", cfg.b}, {"c", cfg.c}, {"rho", cfg.rho}, {"sigma", cfg.sigma}, {"rate", cfg.rate}};
    if (cfg.rate == "tanh") {
        j["params"]["rate_center"] = cfg.rate_center;
        j["params"]["rate_slope"] = cfg.rate_slope;
        j["params"]["rate_scale"] = cfg.rate_scale;
    }
    if (cfg.rate == "step") j["params"]["rate_threshold"] = cfg.rate_threshold;
    j["grid"] = {{"l", cfg.l ? nlohmann::json(*cfg.l) : nlohmann::json(nullptr)},
                 {"n", cfg.n},
                 {"right_bc", cfg.right_bc}};
    j["solver"] = {{"tol", cfg.tol}, {"max_iter", cfg.max_iter}};
    j["sim"] = {{"dt", cfg.dt},         {"horizon", cfg.horizon}, {"seed", cfg.seed},
                {"paths", cfg.paths},   {"record_every", cfg.record_every},
                {"x0", cfg.x0},         {"mc_eps", cfg.mc_eps}};
    j["escape"] = {{"samples", cfg.samples},
                   {"horizon", cfg.escape_horizon ? nlohmann::json(*cfg.escape_horizon) : nlohmann::json(nullptr)}};
    j["sweep"] = {{"name", cfg.sweep_name},
                  {"start", cfg.sweep_start},
                  {"stop", cfg.sweep_stop},
                  {"count", cfg.sweep_count}};
    j["verify"] = {{"paths", cfg.verify_paths}};
    j["output"] = {{"dir", cfg.out}};
    j["run"] = {{"jobs", cfg.jobs}};
    return j;
}

}  // namespace lake
