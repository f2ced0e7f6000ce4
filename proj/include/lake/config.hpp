#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lake/invariant.hpp"
#include "lake/sde.hpp"

namespace lake {

/// Everything a command needs, after defaults, file and command line.
struct RunConfig {
    std::string command;

    double b = 0.65;
    double c = 0.5;
    double rho = 0.03;
    double sigma = 0.1;
    std::string rate = "standard";
    double rate_center = 3.0;
    double rate_slope = 1.0;
    double rate_scale = 1.0;
    double rate_threshold = 3.0;

    std::optional<double> l;
    int n = 4000;
    std::string right_bc = "slope";
    double tol = 1e-10;
    int max_iter = 200;

    double dt = 1e-3;
    double horizon = 100.0;
    std::uint64_t seed = 20240601;
    int paths = 1;
    int record_every = 1;
    double x0 = 1.0;
    double mc_eps = 1e-3;

    int samples = 1000;
    std::optional<double> escape_horizon;  ///< 1e7 dt when empty

    std::string sweep_name = "sigma";
    double sweep_start = 0.05;
    double sweep_stop = 0.6;
    int sweep_count = 12;

    int verify_paths = 1000;

    std::string out = "out";
    int jobs = 0;

    LakeParams lake_params() const;
    SolverOptions solver_options() const;
    SimConfig sim_config() const;
    SweepSpec sweep_spec() const;
};

/// One key = value assignment and where it came from.
struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;  ///< 0 for the command line
    std::string source;
};

/// Parses flat "dotted.key = value" text; '#' starts a comment. Throws
/// ConfigParseError for malformed lines and repeated keys.
std::vector<ConfigEntry> parse_config_text(const std::string& text, const std::string& source);

std::vector<ConfigEntry> read_config_file(const std::string& path);

/// Applies one entry. Throws ConfigParseError naming the key and line for
/// unknown keys and unusable values.
void apply_entry(RunConfig& cfg, const ConfigEntry& entry);

/// Every accepted key, in documentation order.
const std::vector<std::string>& config_keys();

/// Parses "name:start:stop:count" into the sweep fields.
void apply_sweep_shorthand(RunConfig& cfg, const std::string& text);

nlohmann::json to_json(const RunConfig& cfg);

}  // namespace lake
