#include "lake/verify.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace lake {

namespace {

Check at_most(std::string name, double value, double threshold, std::string detail = {}) {
    return {std::move(name), value <= threshold, value, threshold, std::move(detail)};
}

double relative_change(double a, double b) { return std::abs(a - b) / std::abs(a); }

}  // namespace

double slope_floor(const ValueSolution& s) { return -*std::max_element(s.slope.begin(), s.slope.end()); }

double quadratic_bracket_spread(const ValueSolution& s) {
    double lo = INFINITY, hi = -INFINITY;
    for (int i = 0; i <= s.grid.n; ++i) {
        const double y = s.grid.node(i) + s.constants.shift;
        const double w = s.v[i] + s.constants.A * y * y + std::log(y) / s.params.rho();
        lo = std::min(lo, w);
        hi = std::max(hi, w);
    }
    return hi - lo;
}

std::vector<Check> proven_bound_checks(const ValueSolution& s, const ValueSolution& refined) {
    const auto& p = s.params;
    const auto& k = s.constants;
    const double dx = s.grid.dx;
    std::vector<Check> out;

    double worst_step = -INFINITY;
    for (int i = 0; i < s.grid.n; ++i) {
        const double x0 = s.grid.node(i), x1 = s.grid.node(i + 1);
        worst_step = std::max(worst_step, (s.v[i + 1] + k.A * x1 * x1) - (s.v[i] + k.A * x0 * x0));
    }
    out.push_back({"quadratic_shift_decreasing", worst_step < 0.0, worst_step, 0.0,
                   "max_i of (V + A x^2)_{i+1} - (V + A x^2)_i"});
    out.push_back(at_most("v0_upper_bound", s.v[0] - k.v0_upper, 10 * dx, "V_0 - (1/rho) ln((b+rho)/sqrt(2ec))"));

    const double c1 = slope_floor(s), c1_fine = slope_floor(refined);
    out.push_back({"slope_bounded_away_from_zero", c1 > 0.0, c1, 0.0, "C1 = -max_i slope_i"});
    out.push_back(at_most("slope_floor_refinement", relative_change(c1, c1_fine), 0.2,
                          fmt::format("C1 = {} on n, {} on 2n", c1, c1_fine)));

    const double identity = std::abs(std::log(-(s.v[1] - s.v[0]) / dx) + p.rho() * s.v[0] + 1.0);
    out.push_back(at_most("left_boundary_identity", identity, 1e-9, "|ln(-(V_1 - V_0)/dx) + rho V_0 + 1|"));

    const double spread = quadratic_bracket_spread(s), spread_fine = quadratic_bracket_spread(refined);
    out.push_back(at_most("quadratic_bracket_refinement", relative_change(spread, spread_fine), 0.05,
                          fmt::format("spread {} on n, {} on 2n", spread, spread_fine)));

    double small_x = -INFINITY;
    for (int i = 0; s.grid.node(i + 1) <= 0.1; ++i) {
        const double x0 = s.grid.node(i), x1 = s.grid.node(i + 1);
        const double bound = -1.0 / (std::exp(p.rho() * s.v[i] + 1 + p.c() * x1 * x1) + p.rho() * x0);
        small_x = std::max(small_x, s.slope[i] - bound);
    }
    out.push_back(at_most("small_x_slope_bound", small_x, 10 * dx, "max over x <= 0.1 of slope - bound"));
    return out;
}

std::vector<Check> density_checks(const ValueSolution& s, const InvariantDensity& d) {
    const auto& diag = d.diagnostics;
    std::vector<Check> out;
    out.push_back(at_most("asymptotic_residual", s.asymptotic_residual, 1e-2,
                          "max |V - asymptote| over the last 5% of nodes"));
    out.push_back(at_most("density_normalization", diag.normalization_error, 1e-6));
    out.push_back(at_most("density_tail_exponent",
                          relative_change(diag.tail_slope_expected, diag.tail_slope), 0.02,
                          fmt::format("fitted {} against {}", diag.tail_slope, diag.tail_slope_expected)));
    out.push_back(at_most("phi_left_limit",
                          relative_change(diag.left_limit_expected, diag.left_limit_value), 0.05,
                          fmt::format("x Phi(x) = {} at x = {} against {}", diag.left_limit_value,
                                      diag.left_limit_x, diag.left_limit_expected)));
    return out;
}

std::vector<Check> monte_carlo_checks(const ValueSolution& s, const VerifyOptions& opts) {
    const double v = s.value_at(opts.x0);
    std::vector<Check> out;

    const auto mc = estimate_value_mc(s, opts.sim, opts.x0, opts.eps, Execution::Parallel, opts.jobs);
    out.push_back(at_most("mc_value_agreement", std::abs(mc.mean - v), 3 * mc.stderr_ + mc.bias,
                          fmt::format("MC {} +- {} against V = {}", mc.mean, mc.stderr_, v)));

    const auto fb = estimate_payoff_mc(s, bounded_feedback_control(s.params), opts.sim, opts.x0, opts.eps,
                                       Execution::Parallel, opts.jobs);
    out.push_back(at_most("feedback_dominated", fb.mean - v, 3 * fb.stderr_ + fb.bias,
                          fmt::format("feedback payoff {} +- {}", fb.mean, fb.stderr_)));

    const double N = 0.5 * *std::max_element(s.policy.begin(), s.policy.end());
    const auto tr = truncated_policy_value(s, N, opts.sim, opts.x0, opts.eps, Execution::Parallel, opts.jobs);
    const double gap = v - tr.mean;
    out.push_back({"truncation_gap_lower", gap >= -3 * tr.stderr_, gap, -3 * tr.stderr_,
                   fmt::format("N = {}, truncated payoff {} +- {}", N, tr.mean, tr.stderr_)});
    out.push_back(at_most("truncation_gap_upper", gap,
                          truncation_gap_bound(s.params, N) + 3 * tr.stderr_ + tr.bias));
    return out;
}

bool VerifyReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

VerifyReport run_verification(const LakeParams& params, const VerifyOptions& opts) {
    const auto p = validate_params(params);
    const double l = opts.l.value_or(default_right_endpoint(p));
    const auto s = solve(build_grid(p, l, opts.n), p, opts.solver);
    const auto refined = solve(build_grid(p, l, 2 * opts.n), p, opts.solver);

    VerifyReport report;
    report.checks.push_back(at_most("newton_residual", s.residual_norm, opts.solver.tol,
                                    fmt::format("{} iterations", s.newton_iters)));
    for (auto& c : proven_bound_checks(s, refined)) report.checks.push_back(std::move(c));
    if (p.sigma() > 0.0) {
        for (auto& c : density_checks(s, invariant_density(s))) report.checks.push_back(std::move(c));
        for (auto& c : monte_carlo_checks(s, opts)) report.checks.push_back(std::move(c));
    } else {
        report.checks.push_back(at_most("asymptotic_residual", s.asymptotic_residual, 1e-2));
    }
    return report;
}

}  // namespace lake
