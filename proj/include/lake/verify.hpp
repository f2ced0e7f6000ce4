#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lake/sde.hpp"

namespace lake {

struct Check {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

/// Bounds every converged solution must satisfy, compared against a solve on
/// the doubled grid where the statement is about refinement.
std::vector<Check> proven_bound_checks(const ValueSolution& s, const ValueSolution& refined);

/// Smallest C with slope_i <= -C for all i.
double slope_floor(const ValueSolution& s);

/// max - min over the nodes of V_i + A (x_i + s)^2 + ln(x_i + s) / rho.
double quadratic_bracket_spread(const ValueSolution& s);

/// Asymptotic residual check plus the density tail and normalization checks.
std::vector<Check> density_checks(const ValueSolution& s, const InvariantDensity& d);

struct VerifyOptions {
    int n = 4000;
    std::optional<double> l;
    SolverOptions solver{};
    SimConfig sim{1e-3, 1.0, 20240601, 1000};
    double x0 = 1.0;
    double eps = 1e-3;
    int jobs = 0;
};

/// Monte Carlo checks: the optimal payoff matches V(x0), the bounded feedback
/// control does not beat it, and the truncated control obeys the gap bound.
std::vector<Check> monte_carlo_checks(const ValueSolution& s, const VerifyOptions& opts);

struct VerifyReport {
    std::vector<Check> checks;
    bool all_passed() const;
};

/// Runs every check for one parameter set. Validation errors propagate.
VerifyReport run_verification(const LakeParams& params, const VerifyOptions& opts = {});

}  // namespace lake
