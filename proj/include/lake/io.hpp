#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "lake/errors.hpp"
#include "lake/sde.hpp"
#include "lake/verify.hpp"

namespace lake {

/// Shortest round-trip decimal form of a double.
std::string format_number(double x);

/// x,V,dV,policy at every node; dV and policy come from the Policy interpolant.
void write_solution_csv(const std::filesystem::path& file, const ValueSolution& s);
nlohmann::json solution_json(const ValueSolution& s);

/// x,f,F,I on the density mesh.
void write_density_csv(const std::filesystem::path& file, const InvariantDensity& d);
nlohmann::json density_json(const InvariantDensity& d);

/// param,value,kind,location with kind in {mode, antimode}.
void write_sweep_csv(const std::filesystem::path& file, const SweepResult& r);
nlohmann::json sweep_json(const SweepResult& r);

/// t,x
void write_path_csv(const std::filesystem::path& file, const PathSample& path);

/// sample,time,normalized,censored; normalized is empty for censored samples.
void write_escape_csv(const std::filesystem::path& file, const EscapeSample& e);
nlohmann::json escape_json(const EscapeSample& e);

nlohmann::json monte_carlo_json(const MonteCarloEstimate& e);
nlohmann::json checks_json(const std::vector<Check>& checks);

/// {"error": kind, "message": ..., plus the fields specific to the error type}.
nlohmann::json error_json(const Error& e);

void write_json(const std::filesystem::path& file, const nlohmann::json& j);

}  // namespace lake
