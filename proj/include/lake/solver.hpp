#pragma once

#include <span>
#include <string>
#include <vector>

#include "lake/model.hpp"

namespace lake {

/// Uniform partition 0 = x_0 < ... < x_n = l.
struct Grid {
    double l;
    int n;
    double dx;

    double node(int i) const noexcept { return i == n ? l : i * dx; }
    std::vector<double> nodes() const;
};

/// Default right endpoint 4 max(1, a/(b+rho)) + 2.
double default_right_endpoint(const ValidatedParams& p);

/// Builds the grid and enforces dx (r(x_i) - b x_i) <= sigma^2 / 2 at every node.
/// Throws PreconditionError for l <= 0 or n < 8 and MonotonicityViolation otherwise.
Grid build_grid(const ValidatedParams& p, double l, int n);

/// Smallest n making the grid on [0, l] monotone, or -1 when no n works.
long minimal_monotone_n(const ValidatedParams& p, double l);

/// Value of the large-x asymptote at l (the Dirichlet right-boundary value).
double right_boundary_value(const ValidatedParams& p, double l);

/// How V_n is closed.
///
/// AsymptoticSlope pins the last forward difference to dx V'_asym(l - dx/2),
/// which leaves V_n free to follow the interior solution. AsymptoticValue pins
/// V_n = right_boundary_value(l); it is only feasible when the asymptote lies
/// below the true value function at l, which fails for small rho at any
/// practical l.
enum class RightClosure { AsymptoticSlope, AsymptoticValue };

std::string to_string(RightClosure closure);
RightClosure right_closure_from_string(const std::string& name);

/// Component i of the discrete HJB system for nodal values v_0..v_n.
/// Throws NonnegativeForwardDifference when v_{i+1} - v_i >= 0.
double residual_component(std::span<const double> v, const Grid& g, const ValidatedParams& p,
                          int i);

/// Components 0..n-1 of the discrete HJB system; v has n + 1 entries and
/// v[n] is treated as given.
std::vector<double> residual(std::span<const double> v, const Grid& g, const ValidatedParams& p);

/// Jacobian of residual() with respect to v_0..v_{n-1} (v_n held fixed).
/// lower[0] and upper[n-1] are zero; upper_boundary is dF_{n-1}/dv_n.
struct Tridiagonal {
    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;
    double upper_boundary = 0.0;
};

Tridiagonal jacobian(std::span<const double> v, const Grid& g, const ValidatedParams& p);

/// Quadratic through V(0) = v0_upper, V(x_1) = V(0) - dx e^{-(rho V(0) + 1)} and
/// V(l) = right_boundary_value(l), evaluated at all nodes.
std::vector<double> quadratic_guess(const Grid& g, const ValidatedParams& p);

struct InitialGuess {
    std::vector<double> values;
    /// True when the quadratic had a nonnegative forward difference and the
    /// asymptote was used instead.
    bool fallback = false;
};

InitialGuess initial_guess(const Grid& g, const ValidatedParams& p);

struct SolverOptions {
    double tol = 1e-10;
    int max_iter = 200;
    RightClosure closure = RightClosure::AsymptoticSlope;
};

struct ValueSolution {
    Grid grid;
    ValidatedParams params;
    DerivedConstants constants;
    RightClosure closure;
    std::vector<double> v;       ///< V_0..V_n
    std::vector<double> slope;   ///< (V_{i+1} - V_i) / dx, i = 0..n-1
    std::vector<double> policy;  ///< -dx / (V_{i+1} - V_i), i = 0..n-1
    double residual_norm = 0.0;
    int newton_iters = 0;
    bool fallback_guess = false;
    /// max |V_i + A(x_i+s)^2 + ln(2A(x_i+s))/rho - K| over x_i >= 0.95 l.
    double asymptotic_residual = 0.0;
    std::vector<std::string> warnings;

    /// Piecewise-linear interpolation of the nodal values; asymptote beyond l.
    double value_at(double x) const;
};

/// Damped Newton iteration on the discrete HJB system.
///
/// The iterate is stored as V_0 (or V_n) plus forward differences in extended
/// precision, so the residual is free of the cancellation that nodal values
/// suffer at large sigma^2 x^2 / dx^2. Steps are halved (at most 60 times)
/// until every forward difference stays negative and the residual norm
/// decreases. Throws MaxIterationsExceeded, InfeasibleIterate or ZeroPivot.
ValueSolution solve(const Grid& g, const ValidatedParams& p, const SolverOptions& opts = {});

/// Optimal feedback u(x) = -1/V'(x).
///
/// V' is placed at the cell midpoints and interpolated linearly; it is held
/// constant below the first midpoint and follows the derivative of the
/// large-x asymptote beyond the last one.
class Policy {
public:
    explicit Policy(const ValueSolution& s);

    double derivative(double x) const;
    double operator()(double x) const { return -1.0 / derivative(x); }
    /// Drift of the optimally controlled lake, u(x) - b x + r(x).
    double drift(double x) const;

    const std::vector<double>& nodal() const noexcept { return nodal_; }
    double right_endpoint() const noexcept { return l_; }

private:
    double dx_;
    double l_;
    std::vector<double> slope_;
    std::vector<double> nodal_;
    ValidatedParams params_;
    DerivedConstants constants_;
};

Policy policy_from_solution(const ValueSolution& s);

}  // namespace lake
