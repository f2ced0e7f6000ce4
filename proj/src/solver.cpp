#include "lake/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "lake/errors.hpp"
#include "lake/tridiagonal.hpp"

namespace lake {

namespace {

using real = long double;

// Scan resolution for the continuous maximum of r(x) - b x.
constexpr int kDriftScan = 100000;

double max_recycling_excess(const ValidatedParams& p, double l) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= kDriftScan; ++k) {
        const double x = l * k / kDriftScan;
        worst = std::max(worst, p.r(x) - p.b() * x);
    }
    return worst;
}

// Coefficients of one row, shared by the nodal and the increment residual.
struct RowCoefficients {
    real drift;      // (r(x_i) - b x_i) / (rho dx)
    real diffusion;  // sigma^2 x_i^2 / (2 rho dx^2) = sigma^2 i^2 / (2 rho)
    real source;     // (c x_i^2 + 1) / rho
};

RowCoefficients row_coefficients(const Grid& g, const ValidatedParams& p, int i) {
    const double x = g.node(i);
    const real rho = p.rho();
    return {static_cast<real>(p.r(x) - p.b() * x) / (rho * g.dx),
            static_cast<real>(p.sigma()) * p.sigma() * real(i) * real(i) / (2 * rho),
            (static_cast<real>(p.c()) * x * x + 1) / rho};
}

// F_i from V_i and the forward differences d_{i-1} = V_i - V_{i-1}, d_i = V_{i+1} - V_i.
real row_residual(const RowCoefficients& k, real rho, real dx, real v, real back, real fwd) {
    return v - k.drift * back + k.source + std::log(-fwd / dx) / rho - k.diffusion * (fwd - back);
}

void require_decreasing(std::span<const double> v) {
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        if (!(v[i + 1] - v[i] < 0.0)) {
            throw NonnegativeForwardDifference(
                fmt::format("forward difference at node {} is not negative ({})", i, v[i + 1] - v[i]),
                static_cast<int>(i));
        }
    }
}

// Newton state: an anchor value plus forward differences d_0..d_{n-1}.
struct Increments {
    real anchor;            // V_0 for the slope closure, V_n for the value closure
    std::vector<real> d;    // V_{i+1} - V_i
};

std::vector<real> reconstruct(const Increments& s, RightClosure closure) {
    const std::size_t n = s.d.size();
    std::vector<real> v(n + 1);
    if (closure == RightClosure::AsymptoticSlope) {
        v[0] = s.anchor;
        for (std::size_t i = 0; i < n; ++i) v[i + 1] = v[i] + s.d[i];
    } else {
        v[n] = s.anchor;
        for (std::size_t i = n; i-- > 0;) v[i] = v[i + 1] - s.d[i];
    }
    return v;
}

struct ResidualEval {
    std::vector<real> f;
    real norm;
};

ResidualEval increment_residual(const Increments& s, RightClosure closure, const Grid& g,
                                const ValidatedParams& p, std::span<const RowCoefficients> rows) {
    const auto v = reconstruct(s, closure);
    const real rho = p.rho(), dx = g.dx;
    ResidualEval out{std::vector<real>(g.n), 0};
    for (int i = 0; i < g.n; ++i) {
        const real back = i > 0 ? s.d[i - 1] : real(0);
        out.f[i] = row_residual(rows[i], rho, dx, v[i], back, s.d[i]);
        out.norm = std::max(out.norm, std::abs(out.f[i]));
    }
    if (!std::isfinite(static_cast<double>(out.norm))) out.norm = std::numeric_limits<real>::infinity();
    return out;
}

}  // namespace

std::vector<double> Grid::nodes() const {
    std::vector<double> x(n + 1);
    for (int i = 0; i <= n; ++i) x[i] = node(i);
    return x;
}

double default_right_endpoint(const ValidatedParams& p) {
    return 4.0 * std::max(1.0, p.rate().limit() / (p.b() + p.rho())) + 2.0;
}

long minimal_monotone_n(const ValidatedParams& p, double l) {
    const double worst = max_recycling_excess(p, l);
    const double half_var = 0.5 * p.sigma() * p.sigma();
    if (worst <= 0.0) return 8;
    if (half_var <= 0.0) return -1;
    return std::max(8L, static_cast<long>(std::ceil(l * worst / half_var)));
}

Grid build_grid(const ValidatedParams& p, double l, int n) {
    if (!(l > 0.0) || !std::isfinite(l)) {
        throw PreconditionError(fmt::format("right endpoint l must be positive, got {}", l));
    }
    if (n < 8) throw PreconditionError(fmt::format("need at least 8 intervals, got {}", n));

    Grid g{l, n, l / n};
    const double half_var = 0.5 * p.sigma() * p.sigma();
    int worst_node = -1;
    double worst_excess = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
        const double x = g.node(i);
        const double excess = g.dx * (p.r(x) - p.b() * x) - half_var;
        if (excess > worst_excess) {
            worst_excess = excess;
            worst_node = i;
        }
    }
    if (worst_excess > 0.0) {
        const long n_min = minimal_monotone_n(p, l);
        const std::string hint =
            n_min < 0 ? "no grid works with sigma = 0 unless r(x) <= b x on [0, l]"
                      : fmt::format("use n >= {}", n_min);
        throw MonotonicityViolation(
            fmt::format("scheme is not monotone: dx (r(x) - b x) exceeds sigma^2/2 at x = {} ({})",
                        g.node(worst_node), hint),
            worst_node, g.node(worst_node), n_min);
    }
    return g;
}

double right_boundary_value(const ValidatedParams& p, double l) {
    return asymptotic_value(p, derived_constants(p), l);
}

std::string to_string(RightClosure closure) {
    return closure == RightClosure::AsymptoticSlope ? "slope" : "value";
}

RightClosure right_closure_from_string(const std::string& name) {
    if (name == "slope") return RightClosure::AsymptoticSlope;
    if (name == "value") return RightClosure::AsymptoticValue;
    throw ConfigError("ConfigError", fmt::format("unknown right boundary closure '{}'", name));
}

double residual_component(std::span<const double> v, const Grid& g, const ValidatedParams& p,
                          int i) {
    const double fwd = v[i + 1] - v[i];
    if (!(fwd < 0.0)) {
        throw NonnegativeForwardDifference(
            fmt::format("forward difference at node {} is not negative ({})", i, fwd), i);
    }
    const double back = i > 0 ? v[i] - v[i - 1] : 0.0;
    const auto k = row_coefficients(g, p, i);
    return static_cast<double>(row_residual(k, p.rho(), g.dx, v[i], back, fwd));
}

std::vector<double> residual(std::span<const double> v, const Grid& g, const ValidatedParams& p) {
    if (v.size() != static_cast<std::size_t>(g.n) + 1) {
        throw PreconditionError(fmt::format("expected {} nodal values, got {}", g.n + 1, v.size()));
    }
    std::vector<double> f(g.n);
    for (int i = 0; i < g.n; ++i) f[i] = residual_component(v, g, p, i);
    return f;
}

Tridiagonal jacobian(std::span<const double> v, const Grid& g, const ValidatedParams& p) {
    if (v.size() != static_cast<std::size_t>(g.n) + 1) {
        throw PreconditionError(fmt::format("expected {} nodal values, got {}", g.n + 1, v.size()));
    }
    require_decreasing(v);
    const int n = g.n;
    Tridiagonal jac{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n), 0.0};
    for (int i = 0; i < n; ++i) {
        const auto k = row_coefficients(g, p, i);
        const double log_term = 1.0 / (p.rho() * (v[i] - v[i + 1]));
        if (i > 0) {
            jac.lower[i] = static_cast<double>(k.drift - k.diffusion);
            jac.diag[i] = static_cast<double>(1 - k.drift + 2 * k.diffusion) + log_term;
        } else {
            jac.diag[i] = 1.0 + log_term;
        }
        const double up = static_cast<double>(-k.diffusion) - log_term;
        if (i + 1 < n) {
            jac.upper[i] = up;
        } else {
            jac.upper_boundary = up;
        }
    }
    return jac;
}

std::vector<double> quadratic_guess(const Grid& g, const ValidatedParams& p) {
    const auto k = derived_constants(p);
    const double v0 = k.v0_upper;
    const double v1 = v0 - g.dx * std::exp(-(p.rho() * v0 + 1.0));
    const double vn = right_boundary_value(p, g.l);
    // V(x) = v0 + beta x + gamma x^2 through (x_1, v1) and (l, vn).
    const double x1 = g.dx, l = g.l;
    const double gamma = ((vn - v0) / l - (v1 - v0) / x1) / (l - x1);
    const double beta = (v1 - v0) / x1 - gamma * x1;
    std::vector<double> out(g.n + 1);
    for (int i = 0; i <= g.n; ++i) {
        const double x = g.node(i);
        out[i] = v0 + beta * x + gamma * x * x;
    }
    out[1] = v1;
    out[g.n] = vn;
    return out;
}

InitialGuess initial_guess(const Grid& g, const ValidatedParams& p) {
    auto quad = quadratic_guess(g, p);
    const bool degenerate =
        std::adjacent_find(quad.begin(), quad.end(), [](double a, double b) { return b >= a; }) !=
        quad.end();
    if (!degenerate) return {std::move(quad), false};

    const auto k = derived_constants(p);
    std::vector<double> asym(g.n + 1);
    for (int i = 0; i <= g.n; ++i) asym[i] = asymptotic_value(p, k, g.node(i));
    return {std::move(asym), true};
}

ValueSolution solve(const Grid& g, const ValidatedParams& p, const SolverOptions& opts) {
    if (!(opts.tol > 0.0)) throw PreconditionError("tolerance must be positive");
    const int n = g.n;
    const auto consts = derived_constants(p);
    const auto closure = opts.closure;
    const real dx = g.dx, rho = p.rho();
    const real boundary_step = dx * static_cast<real>(asymptotic_slope(p, consts, g.l - 0.5 * g.dx));
    const double v_right = right_boundary_value(p, g.l);

    std::vector<RowCoefficients> rows(n);
    for (int i = 0; i < n; ++i) rows[i] = row_coefficients(g, p, i);

    const auto guess = initial_guess(g, p);
    Increments state;
    state.d.resize(n);
    for (int i = 0; i < n; ++i) state.d[i] = real(guess.values[i + 1]) - real(guess.values[i]);
    if (closure == RightClosure::AsymptoticSlope) {
        state.anchor = guess.values[0];
        state.d[n - 1] = boundary_step;
    } else {
        state.anchor = v_right;
        state.d[n - 1] = real(v_right) - real(guess.values[n - 1]);
    }

    const real margin = 1e-14L * std::abs(real(v_right)) / real(g.l);
    auto feasible = [&](const Increments& s) {
        return std::all_of(s.d.begin(), s.d.end(), [&](real d) { return d < -margin; });
    };
    if (!feasible(state)) {
        throw InfeasibleIterate("initial guess has a nonnegative forward difference");
    }

    auto eval = increment_residual(state, closure, g, p, rows);
    int iter = 0;
    std::vector<real> lower(n), diag(n), upper(n), rhs(n);
    for (; iter < opts.max_iter && !(eval.norm <= opts.tol); ++iter) {
        for (int i = 0; i < n; ++i) {
            const auto& k = rows[i];
            const real log_term = 1 / (rho * -state.d[i]);
            lower[i] = i > 0 ? k.drift - k.diffusion : real(0);
            diag[i] = (i > 0 ? 1 - k.drift + 2 * k.diffusion : real(1)) + log_term;
            upper[i] = -k.diffusion - log_term;
            rhs[i] = -eval.f[i];
        }
        // V_n moves with V_{n-1} under the slope closure.
        if (closure == RightClosure::AsymptoticSlope) diag[n - 1] += upper[n - 1];
        upper[n - 1] = 0;

        const auto step = solve_tridiagonal<real>(lower, diag, upper, rhs);

        real t = 1;
        bool accepted = false;
        bool any_feasible = false;
        Increments trial;
        ResidualEval trial_eval;
        for (int halving = 0; halving <= 60; ++halving, t /= 2) {
            trial = state;
            if (closure == RightClosure::AsymptoticSlope) {
                trial.anchor += t * step[0];
                for (int i = 0; i + 1 < n; ++i) trial.d[i] += t * (step[i + 1] - step[i]);
            } else {
                for (int i = 0; i + 1 < n; ++i) trial.d[i] += t * (step[i + 1] - step[i]);
                trial.d[n - 1] -= t * step[n - 1];
            }
            if (!feasible(trial)) continue;
            any_feasible = true;
            trial_eval = increment_residual(trial, closure, g, p, rows);
            if (trial_eval.norm < (1 - 1e-4L * t) * eval.norm) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            const auto v = reconstruct(state, closure);
            std::vector<double> best(v.begin(), v.end());
            if (!any_feasible) {
                throw InfeasibleIterate(fmt::format(
                    "damping could not keep forward differences negative (iteration {}, residual {})",
                    iter, static_cast<double>(eval.norm)));
            }
            throw MaxIterationsExceeded(
                fmt::format("Newton stagnated at residual {} after {} iterations",
                            static_cast<double>(eval.norm), iter),
                std::move(best), static_cast<double>(eval.norm));
        }
        state = std::move(trial);
        eval = std::move(trial_eval);
    }

    const auto v_ext = reconstruct(state, closure);
    if (!(eval.norm <= opts.tol)) {
        throw MaxIterationsExceeded(
            fmt::format("Newton did not reach {} within {} iterations (residual {})", opts.tol,
                        opts.max_iter, static_cast<double>(eval.norm)),
            std::vector<double>(v_ext.begin(), v_ext.end()), static_cast<double>(eval.norm));
    }

    ValueSolution s{g, p, consts, closure, {}, {}, {}, static_cast<double>(eval.norm), iter,
                    guess.fallback, 0.0, p.warnings()};
    s.v.assign(v_ext.begin(), v_ext.end());
    s.slope.resize(n);
    s.policy.resize(n);
    for (int i = 0; i < n; ++i) {
        s.slope[i] = static_cast<double>(state.d[i] / dx);
        s.policy[i] = static_cast<double>(-dx / state.d[i]);
    }
    for (int i = 0; i <= n; ++i) {
        const double x = g.node(i);
        if (x < 0.95 * g.l) continue;
        s.asymptotic_residual =
            std::max(s.asymptotic_residual, std::abs(s.v[i] - asymptotic_value(p, consts, x)));
    }
    if (s.asymptotic_residual > 1e-2) {
        s.warnings.push_back(fmt::format(
            "large-x asymptote differs from the solution by up to {:.3g} on [0.95 l, l]",
            s.asymptotic_residual));
    }
    return s;
}

double ValueSolution::value_at(double x) const {
    if (x >= grid.l) {
        return v.back() + asymptotic_value(params, constants, x) -
               asymptotic_value(params, constants, grid.l);
    }
    if (x <= 0.0) return v.front();
    const double pos = x / grid.dx;
    const int i = std::min(static_cast<int>(pos), grid.n - 1);
    const double w = pos - i;
    return (1.0 - w) * v[i] + w * v[i + 1];
}

Policy::Policy(const ValueSolution& s)
    : dx_(s.grid.dx),
      l_(s.grid.l),
      slope_(s.slope),
      nodal_(s.policy),
      params_(s.params),
      constants_(s.constants) {}

double Policy::derivative(double x) const {
    // Midpoints sit at (i + 1/2) dx.
    const double pos = x / dx_ - 0.5;
    if (pos <= 0.0) return slope_.front();
    const auto last = static_cast<double>(slope_.size() - 1);
    if (pos >= last) return asymptotic_slope(params_, constants_, x);
    const auto i = static_cast<std::size_t>(pos);
    const double w = pos - static_cast<double>(i);
    return (1.0 - w) * slope_[i] + w * slope_[i + 1];
}

double Policy::drift(double x) const {
    return (*this)(x) - params_.b() * x + params_.r(x);
}

Policy policy_from_solution(const ValueSolution& s) { return Policy(s); }

}  // namespace lake
