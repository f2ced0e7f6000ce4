#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lake/solver.hpp"

namespace lake {

/// Drift h(x) = u(x) - b x + r(x) of the optimally controlled lake.
///
/// Evaluation beyond max_x() (100 l by default) throws
/// DriftEvaluationOutOfRange; the policy there is pure extrapolation.
class DriftField {
public:
    explicit DriftField(const ValueSolution& s, double extension_factor = 100.0);

    double operator()(double x) const;
    double policy(double x) const;
    double max_x() const noexcept { return max_x_; }
    const ValidatedParams& params() const noexcept { return params_; }

private:
    Policy policy_;
    ValidatedParams params_;
    double max_x_;
};

/// Evaluation mesh for the density: log-spaced points on [lower_fraction l, l],
/// the solver nodes, and log-spaced points on (l, extension_factor l].
struct MeshSpec {
    double lower_fraction = 1e-6;
    int log_points = 8000;
    double extension_factor = 100.0;
    int extension_points = 400;

    /// Halves every log step, so the result contains this mesh.
    MeshSpec refined() const {
        return {lower_fraction, 2 * log_points - 1, extension_factor, 2 * extension_points};
    }
};

std::vector<double> density_mesh(const Grid& g, const MeshSpec& spec);

/// Integrals of g(u)/u^2 from each mesh node to the last one, with g linear
/// on every cell and integrated exactly against 1/u^2. The last entry is 0.
std::vector<double> inverse_square_integral(std::span<const double> mesh, std::span<const double> g);

/// Closed form of the integral of (a - C/u + 1/(2A(u+s)))/u^2 over [X, inf).
double phi_tail(double a, double C, double A, double shift, double X);

/// Phi(x), the integral over [x, inf) of (u(t) + r(t))/t^2.
class PhiSigma {
public:
    explicit PhiSigma(const ValueSolution& s, const MeshSpec& spec = {});

    double operator()(double x) const;
    const std::vector<double>& mesh() const noexcept { return mesh_; }
    /// Phi at each mesh node.
    const std::vector<double>& values() const noexcept { return values_; }

private:
    DriftField drift_;
    std::vector<double> mesh_;
    std::vector<double> values_;
};

/// Convenience wrapper building a PhiSigma on the default mesh. Throws
/// PreconditionError for x <= 0.
double phi_sigma(const ValueSolution& s, double x);

struct Extrema {
    std::vector<double> modes;      ///< local maxima
    std::vector<double> antimodes;  ///< local minima
};

/// Interior extrema of values sampled on an increasing mesh.
///
/// Differences below a relative margin of 1e-10 count as flat, flat runs are
/// merged to their midpoint, and an extremum is kept only when the 3-point
/// smoothed sequence has one of the same kind within two nodes. Locations are
/// refined by a parabola through the neighbouring nodes.
Extrema find_extrema(std::span<const double> mesh, std::span<const double> values);

struct DensityDiagnostics {
    MeshSpec mesh_spec;
    std::size_t mesh_size = 0;
    /// |integral of f by composite Simpson - 1|; Z itself comes from the trapezoid rule.
    double normalization_error = 0.0;
    double tail_slope = 0.0;           ///< fitted d ln f / d ln x
    double tail_slope_expected = 0.0;  ///< -2(1 + b / sigma^2)
    double tail_fit_lo = 0.0;
    double tail_fit_hi = 0.0;
    double left_limit_x = 1e-4;
    double left_limit_value = 0.0;     ///< x Phi(x) at left_limit_x
    double left_limit_expected = 0.0;  ///< 1/|V'(0)| = exp(rho V_0 + 1)
};

struct InvariantDensity {
    std::vector<double> mesh;
    std::vector<double> f;
    std::vector<double> log_f;
    std::vector<double> F;
    std::vector<double> I;
    /// Normalizer of x^{-2(1+b/sigma^2)} e^{-2 Phi / sigma^2}; may overflow, log_Z does not.
    double Z = 0.0;
    double log_Z = 0.0;
    std::vector<double> modes;
    std::vector<double> antimodes;
    DensityDiagnostics diagnostics;

    /// CDF by linear interpolation; 0 below the mesh and 1 above it.
    double cdf(double x) const;
    /// "oligotrophic" for the leftmost of several modes, "eutrophic" for the
    /// rightmost, "intermediate" otherwise and "unique" for a single mode.
    std::string mode_label(std::size_t k) const;
};

/// Stationary density of the optimally controlled lake. Throws
/// PreconditionError for sigma = 0 and NormalizationFailure when the density
/// cannot be normalized on the mesh.
InvariantDensity invariant_density(const ValueSolution& s, const MeshSpec& spec = {});

enum class SweepParameter { Sigma, C, Rho };

std::string to_string(SweepParameter p);
SweepParameter sweep_parameter_from_string(const std::string& name);

struct SweepSpec {
    SweepParameter parameter = SweepParameter::Sigma;
    std::vector<double> values;
};

/// Evenly spaced values from start to stop inclusive.
std::vector<double> linspace(double start, double stop, int count);

struct SweepPoint {
    double value = 0.0;
    bool ok = false;
    std::string error_kind;
    std::string error;
    std::vector<double> modes;
    std::vector<double> antimodes;
    double residual_norm = 0.0;
    int newton_iters = 0;
    double V0 = 0.0;
};

struct SweepResult {
    SweepParameter parameter = SweepParameter::Sigma;
    std::vector<SweepPoint> points;  ///< ordered by parameter value

    bool complete() const;
};

struct SweepOptions {
    int n = 4000;
    std::optional<double> l;  ///< default_right_endpoint per point when empty
    SolverOptions solver{};
    MeshSpec mesh{};
};

/// One solve + density per value. Failures are recorded per point and the
/// sweep continues.
SweepPoint sweep_point(const LakeParams& base, SweepParameter parameter, double value,
                       const SweepOptions& opts);

/// Serial reference implementation.
SweepResult bifurcation_sweep_serial(const LakeParams& base, const SweepSpec& spec,
                                     const SweepOptions& opts = {});

/// OpenMP version; same result as the serial one, point for point.
SweepResult bifurcation_sweep(const LakeParams& base, const SweepSpec& spec,
                              const SweepOptions& opts = {}, int jobs = 0);

}  // namespace lake
