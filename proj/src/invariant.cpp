#include "lake/invariant.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>
#include <omp.h>

#include "lake/errors.hpp"

namespace lake {

namespace {

// Exact integral of g/u^2 over [s0, s1] for g linear between g0 and g1.
double cell_integral(double s0, double s1, double g0, double g1) {
    const double d = s1 - s0;
    const double beta = (g1 - g0) / d;
    return g0 * d / (s0 * s1) + beta * (std::log1p(d / s0) - d / s1);
}

std::vector<double> log_spaced(double lo, double hi, int count) {
    std::vector<double> out(count);
    const double step = std::log(hi / lo) / (count - 1);
    for (int k = 0; k < count; ++k) out[k] = lo * std::exp(step * k);
    out.back() = hi;
    return out;
}

struct Run {
    std::size_t start;
    std::size_t end;
};

// Consecutive samples closer than the margin form one run.
std::vector<Run> flat_runs(std::span<const double> v) {
    std::vector<Run> runs;
    std::size_t start = 0;
    for (std::size_t k = 1; k <= v.size(); ++k) {
        const bool flat = k < v.size() &&
                          std::abs(v[k] - v[start]) <= 1e-10 * std::max(1.0, std::abs(v[start]));
        if (!flat) {
            runs.push_back({start, k - 1});
            start = k;
        }
    }
    return runs;
}

struct RawExtremum {
    Run run;
    bool is_max;
};

std::vector<RawExtremum> discrete_extrema(std::span<const double> v) {
    const auto runs = flat_runs(v);
    std::vector<RawExtremum> out;
    for (std::size_t j = 1; j + 1 < runs.size(); ++j) {
        const double prev = v[runs[j - 1].start], here = v[runs[j].start], next = v[runs[j + 1].start];
        if (here > prev && here > next) out.push_back({runs[j], true});
        if (here < prev && here < next) out.push_back({runs[j], false});
    }
    return out;
}

double parabola_vertex(std::span<const double> x, std::span<const double> v, std::size_t k) {
    const double h0 = x[k - 1] - x[k], h2 = x[k + 1] - x[k];
    const double d0 = v[k - 1] - v[k], d2 = v[k + 1] - v[k];
    // Fit d = alpha t + beta t^2 through (h0, d0), (h2, d2).
    const double beta = (d2 / h2 - d0 / h0) / (h2 - h0);
    const double alpha = d0 / h0 - beta * h0;
    if (beta == 0.0) return x[k];
    const double t = std::clamp(-alpha / (2 * beta), h0, h2);
    return x[k] + t;
}

void apply_value(LakeParams& p, SweepParameter parameter, double value) {
    switch (parameter) {
        case SweepParameter::Sigma: p.sigma = value; break;
        case SweepParameter::C: p.c = value; break;
        case SweepParameter::Rho: p.rho = value; break;
    }
}

SweepSpec sorted(SweepSpec spec) {
    std::stable_sort(spec.values.begin(), spec.values.end());
    return spec;
}

}  // namespace

DriftField::DriftField(const ValueSolution& s, double extension_factor)
    : policy_(s), params_(s.params), max_x_(extension_factor * s.grid.l) {}

double DriftField::policy(double x) const {
    if (!(x >= 0.0 && x <= max_x_ * (1 + 1e-12))) {
        throw DriftEvaluationOutOfRange(
            fmt::format("drift requested at x = {} outside [0, {}]", x, max_x_), x);
    }
    return policy_(x);
}

double DriftField::operator()(double x) const {
    return policy(x) - params_.b() * x + params_.r(x);
}

std::vector<double> density_mesh(const Grid& g, const MeshSpec& spec) {
    if (spec.log_points < 2 || spec.extension_points < 2 || !(spec.lower_fraction > 0.0) ||
        spec.lower_fraction >= 1.0 || !(spec.extension_factor > 1.0)) {
        throw PreconditionError("mesh spec needs >= 2 points per segment, 0 < lower_fraction < 1 "
                                "and extension_factor > 1");
    }
    std::vector<double> mesh = log_spaced(spec.lower_fraction * g.l, g.l, spec.log_points);
    for (int i = 1; i < g.n; ++i) mesh.push_back(g.node(i));
    const auto ext = log_spaced(g.l, spec.extension_factor * g.l, spec.extension_points + 1);
    mesh.insert(mesh.end(), ext.begin() + 1, ext.end());
    std::sort(mesh.begin(), mesh.end());
    // Drop near-coincident points so no cell is degenerate.
    std::vector<double> out;
    out.reserve(mesh.size());
    for (double x : mesh) {
        if (out.empty() || x - out.back() > 1e-12 * x) out.push_back(x);
    }
    return out;
}

std::vector<double> inverse_square_integral(std::span<const double> mesh, std::span<const double> g) {
    std::vector<double> out(mesh.size(), 0.0);
    for (std::size_t k = mesh.size() - 1; k-- > 0;) {
        out[k] = out[k + 1] + cell_integral(mesh[k], mesh[k + 1], g[k], g[k + 1]);
    }
    return out;
}

double phi_tail(double a, double C, double A, double shift, double X) {
    // Integral of 1/(u^2 (u + s)) over [X, inf).
    const double q = shift / X;
    double t;
    if (q < 1e-3) {
        t = (0.5 - q / 3 + q * q / 4) / (X * X);
    } else {
        t = 1.0 / (shift * X) - std::log1p(q) / (shift * shift);
    }
    return a / X - C / (2 * X * X) + t / (2 * A);
}

PhiSigma::PhiSigma(const ValueSolution& s, const MeshSpec& spec)
    : drift_(s, spec.extension_factor), mesh_(density_mesh(s.grid, spec)) {
    std::vector<double> g(mesh_.size());
    for (std::size_t k = 0; k < mesh_.size(); ++k) g[k] = drift_.policy(mesh_[k]) + s.params.r(mesh_[k]);
    values_ = inverse_square_integral(mesh_, g);
    const auto& rate = s.params.rate();
    const double tail = phi_tail(rate.limit(), rate.tail_constant(), s.constants.A, s.constants.shift,
                                 mesh_.back());
    for (double& v : values_) v += tail;
}

double PhiSigma::operator()(double x) const {
    if (!(x > 0.0)) throw PreconditionError(fmt::format("Phi needs x > 0, got {}", x));
    const auto& p = drift_.params();
    const auto& rate = p.rate();
    if (x >= mesh_.back()) {
        const auto k = derived_constants(p);
        return phi_tail(rate.limit(), rate.tail_constant(), k.A, k.shift, x);
    }
    // First node strictly above x.
    const auto it = std::upper_bound(mesh_.begin(), mesh_.end(), x);
    const auto k = static_cast<std::size_t>(it - mesh_.begin());
    const double gx = drift_.policy(x) + p.r(x);
    const double gk = drift_.policy(mesh_[k]) + p.r(mesh_[k]);
    return values_[k] + cell_integral(x, mesh_[k], gx, gk);
}

double phi_sigma(const ValueSolution& s, double x) {
    if (!(x > 0.0)) throw PreconditionError(fmt::format("Phi needs x > 0, got {}", x));
    return PhiSigma(s)(x);
}

Extrema find_extrema(std::span<const double> mesh, std::span<const double> values) {
    const std::size_t n = values.size();
    Extrema out;
    if (n < 3) return out;
    std::vector<double> smooth(values.begin(), values.end());
    for (std::size_t k = 1; k + 1 < n; ++k) smooth[k] = (values[k - 1] + values[k] + values[k + 1]) / 3;

    const auto raw = discrete_extrema(values);
    const auto sm = discrete_extrema(smooth);
    std::vector<RawExtremum> kept;
    for (const auto& e : raw) {
        const bool persists = std::any_of(sm.begin(), sm.end(), [&](const RawExtremum& s) {
            return s.is_max == e.is_max && s.run.end + 2 >= e.run.start && s.run.start <= e.run.end + 2;
        });
        if (!persists) continue;
        if (!kept.empty() && kept.back().is_max == e.is_max) {
            // Two of a kind in a row: keep the more pronounced one.
            const double prev = values[kept.back().run.start], here = values[e.run.start];
            if (e.is_max ? here > prev : here < prev) kept.back() = e;
            continue;
        }
        kept.push_back(e);
    }
    for (const auto& e : kept) {
        const double x = e.run.start == e.run.end ? parabola_vertex(mesh, values, e.run.start)
                                                  : 0.5 * (mesh[e.run.start] + mesh[e.run.end]);
        (e.is_max ? out.modes : out.antimodes).push_back(x);
    }
    return out;
}

double InvariantDensity::cdf(double x) const {
    if (x <= mesh.front()) return 0.0;
    if (x >= mesh.back()) return 1.0;
    const auto it = std::upper_bound(mesh.begin(), mesh.end(), x);
    const auto k = static_cast<std::size_t>(it - mesh.begin());
    const double w = (x - mesh[k - 1]) / (mesh[k] - mesh[k - 1]);
    return (1 - w) * F[k - 1] + w * F[k];
}

std::string InvariantDensity::mode_label(std::size_t k) const {
    if (modes.size() == 1) return "unique";
    if (k == 0) return "oligotrophic";
    if (k + 1 == modes.size()) return "eutrophic";
    return "intermediate";
}

InvariantDensity invariant_density(const ValueSolution& s, const MeshSpec& spec) {
    const auto& p = s.params;
    if (!(p.sigma() > 0.0)) throw PreconditionError("the invariant density needs sigma > 0");
    const PhiSigma phi(s, spec);

    InvariantDensity d;
    d.mesh = phi.mesh();
    const std::size_t m = d.mesh.size();
    const double s2 = p.sigma() * p.sigma();
    const double exponent = -2 * (1 + p.b() / s2);

    std::vector<double> logx(m), logf(m);
    for (std::size_t k = 0; k < m; ++k) {
        logx[k] = std::log(d.mesh[k]);
        logf[k] = exponent * logx[k] - 2 / s2 * phi.values()[k];
    }
    const double peak = *std::max_element(logf.begin(), logf.end());

    // Work with x f in log coordinates, where the integrand is smooth.
    std::vector<double> xf(m);
    for (std::size_t k = 0; k < m; ++k) xf[k] = std::exp(logf[k] - peak + logx[k]);
    d.F.assign(m, 0.0);
    for (std::size_t k = 1; k < m; ++k) {
        d.F[k] = d.F[k - 1] + 0.5 * (xf[k - 1] + xf[k]) * (logx[k] - logx[k - 1]);
    }
    const double z = d.F.back();
    if (!(z > 0.0) || !std::isfinite(z)) {
        throw NormalizationFailure(fmt::format(
            "density integral {} on {} mesh points over [{}, {}]", z, m, d.mesh.front(), d.mesh.back()));
    }

    // Composite Simpson on the same points as an independent check of Z.
    double simpson = 0.0;
    std::size_t k = 0;
    for (; k + 2 < m; k += 2) {
        const double h0 = logx[k + 1] - logx[k], h1 = logx[k + 2] - logx[k + 1];
        simpson += (h0 + h1) / 6 *
                   ((2 - h1 / h0) * xf[k] + (h0 + h1) * (h0 + h1) / (h0 * h1) * xf[k + 1] +
                    (2 - h0 / h1) * xf[k + 2]);
    }
    if (k + 1 < m) simpson += 0.5 * (xf[k] + xf[k + 1]) * (logx[k + 1] - logx[k]);

    d.log_Z = peak + std::log(z);
    d.Z = std::exp(d.log_Z);
    d.f.resize(m);
    d.log_f.resize(m);
    d.I.resize(m);
    std::vector<double> log_I(m);
    for (std::size_t j = 0; j < m; ++j) {
        d.log_f[j] = logf[j] - d.log_Z;
        d.f[j] = std::exp(d.log_f[j]);
        d.F[j] /= z;
        log_I[j] = std::log(p.sigma()) + logx[j] + d.log_f[j];
        d.I[j] = std::exp(log_I[j]);
    }
    d.F.back() = 1.0;

    const auto extrema = find_extrema(d.mesh, log_I);
    d.modes = extrema.modes;
    d.antimodes = extrema.antimodes;

    auto& diag = d.diagnostics;
    diag.mesh_spec = spec;
    diag.mesh_size = m;
    diag.normalization_error = std::abs(simpson / z - 1);
    if (diag.normalization_error > 1e-3) {
        throw NormalizationFailure(fmt::format(
            "trapezoid and Simpson normalizers differ by {:.3e} on {} mesh points; refine the mesh",
            diag.normalization_error, m));
    }

    // Least-squares slope of ln f against ln x over the top half decade of the mesh.
    diag.tail_fit_hi = d.mesh.back();
    diag.tail_fit_lo = 0.3 * diag.tail_fit_hi;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (std::size_t j = 0; j < m; ++j) {
        if (d.mesh[j] < diag.tail_fit_lo) continue;
        sx += logx[j];
        sy += d.log_f[j];
        sxx += logx[j] * logx[j];
        sxy += logx[j] * d.log_f[j];
        ++count;
    }
    diag.tail_slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    diag.tail_slope_expected = exponent;
    diag.left_limit_value = diag.left_limit_x * phi(diag.left_limit_x);
    diag.left_limit_expected = std::exp(p.rho() * s.v.front() + 1);
    return d;
}

std::string to_string(SweepParameter p) {
    switch (p) {
        case SweepParameter::Sigma: return "sigma";
        case SweepParameter::C: return "c";
        case SweepParameter::Rho: return "rho";
    }
    return "sigma";
}

SweepParameter sweep_parameter_from_string(const std::string& name) {
    if (name == "sigma") return SweepParameter::Sigma;
    if (name == "c") return SweepParameter::C;
    if (name == "rho") return SweepParameter::Rho;
    throw PreconditionError(fmt::format("unknown sweep parameter '{}' (expected sigma, c or rho)", name));
}

std::vector<double> linspace(double start, double stop, int count) {
    if (count < 1) throw PreconditionError("sweep count must be at least 1");
    std::vector<double> out(count, start);
    for (int k = 1; k < count; ++k) out[k] = start + (stop - start) * k / (count - 1);
    if (count > 1) out.back() = stop;
    return out;
}

bool SweepResult::complete() const {
    return std::all_of(points.begin(), points.end(), [](const SweepPoint& p) { return p.ok; });
}

SweepPoint sweep_point(const LakeParams& base, SweepParameter parameter, double value,
                       const SweepOptions& opts) {
    SweepPoint point;
    point.value = value;
    try {
        LakeParams lp = base;
        apply_value(lp, parameter, value);
        const auto p = validate_params(lp);
        const auto g = build_grid(p, opts.l.value_or(default_right_endpoint(p)), opts.n);
        const auto s = solve(g, p, opts.solver);
        point.residual_norm = s.residual_norm;
        point.newton_iters = s.newton_iters;
        point.V0 = s.v.front();
        const auto d = invariant_density(s, opts.mesh);
        point.modes = d.modes;
        point.antimodes = d.antimodes;
        point.ok = true;
    } catch (const Error& e) {
        point.error_kind = e.kind();
        point.error = e.what();
    } catch (const std::exception& e) {
        point.error_kind = "InternalError";
        point.error = e.what();
    }
    return point;
}

SweepResult bifurcation_sweep_serial(const LakeParams& base, const SweepSpec& spec,
                                     const SweepOptions& opts) {
    const auto ordered = sorted(spec);
    SweepResult out{spec.parameter, {}};
    for (double v : ordered.values) out.points.push_back(sweep_point(base, spec.parameter, v, opts));
    return out;
}

SweepResult bifurcation_sweep(const LakeParams& base, const SweepSpec& spec, const SweepOptions& opts,
                              int jobs) {
    const auto ordered = sorted(spec);
    SweepResult out{spec.parameter, std::vector<SweepPoint>(ordered.values.size())};
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
    const auto count = static_cast<long>(ordered.values.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long k = 0; k < count; ++k) {
        out.points[k] = sweep_point(base, spec.parameter, ordered.values[k], opts);
    }
    return out;
}

}  // namespace lake
