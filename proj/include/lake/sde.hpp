#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lake/invariant.hpp"

namespace lake {

struct SimConfig {
    double dt = 1e-3;
    double horizon = 1.0;
    std::uint64_t seed = 20240601;
    int n_paths = 1;
    int record_every = 1;
    /// Each step consumes this many standard normals and uses their scaled
    /// sum, so a run at dt and one at dt/m with noise_substeps m times smaller
    /// are driven by the same Brownian path.
    int noise_substeps = 1;
};

/// Throws PreconditionError unless dt > 0, horizon >= dt, n_paths >= 1,
/// record_every >= 1 and noise_substeps >= 1.
void validate(const SimConfig& cfg);

/// dx = h(x) dt + sigma x dW, integrated as y = ln x.
struct Dynamics {
    std::function<double(double)> drift;
    double sigma = 0.0;
    /// Drift evaluations beyond this throw DriftEvaluationOutOfRange.
    double max_x = 0.0;
};

/// A loading control u(x) > 0.
using Control = std::function<double(double)>;

Control optimal_control(const ValueSolution& s);
/// The suboptimal feedback max(1, x)/(1 + x^2) + a - r(x).
Control bounded_feedback_control(const ValidatedParams& p);
/// min(u_opt(x), N).
Control truncated_control(const ValueSolution& s, double N);
Control constant_control(double u0);

/// Dynamics of the lake under a control, valid up to 100 l.
Dynamics controlled_dynamics(const ValueSolution& s, const Control& u);

struct PathSample {
    std::vector<double> times;
    std::vector<double> states;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    LakeParams params;
};

/// Euler-Maruyama in y = ln x: y += (h(x)/x - sigma^2/2) dt + sigma sqrt(dt) Z.
/// States are recorded every record_every steps, starting with x0 at t = 0.
PathSample simulate_path(const Dynamics& dyn, const SimConfig& cfg, double x0, std::uint64_t path_index = 0);
PathSample simulate_path(const ValueSolution& s, const SimConfig& cfg, double x0, std::uint64_t path_index = 0);

/// Cutoff time and truncation bias for a discounted payoff estimate.
///
/// S bounds |ln u(x) - c x^2| on [0, l]; the neglected tail is at most
/// S e^{-rho T} / rho, and T is chosen to make that equal to eps.
struct PayoffHorizon {
    double T = 0.0;
    double bias = 0.0;
    double S = 0.0;
};

PayoffHorizon payoff_horizon(const ValueSolution& s, const Control& u, double eps = 1e-3);

struct MonteCarloEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    double bias = 0.0;
    double T_cutoff = 0.0;
    int n_paths = 0;
    std::vector<double> payoffs;  ///< per path, in path order
};

enum class Execution { Serial, Parallel };

/// Discounted payoff of a control, integral of e^{-rho t}(ln u - c x^2) over
/// [0, T] by the left-endpoint rule on each path. cfg.horizon is ignored;
/// T comes from payoff_horizon. Paths use streams 0..n_paths-1.
MonteCarloEstimate estimate_payoff_mc(const ValueSolution& s, const Control& u, const SimConfig& cfg,
                                      double x0, double eps = 1e-3,
                                      Execution exec = Execution::Parallel, int jobs = 0);

/// Payoff of the optimal feedback; the cross-check of V(x0).
MonteCarloEstimate estimate_value_mc(const ValueSolution& s, const SimConfig& cfg, double x0,
                                     double eps = 1e-3, Execution exec = Execution::Parallel,
                                     int jobs = 0);

/// Payoff of min(u_opt, N).
MonteCarloEstimate truncated_policy_value(const ValueSolution& s, double N, const SimConfig& cfg,
                                          double x0, double eps = 1e-3,
                                          Execution exec = Execution::Parallel, int jobs = 0);

/// Upper bound on V - V_N for controls truncated at N.
double truncation_gap_bound(const ValidatedParams& p, double N);

struct EscapeSample {
    double x_minus = 0.0;
    double x_plus = 0.0;
    double horizon = 0.0;
    std::vector<double> times;    ///< first time with x >= x_plus; horizon if censored
    std::vector<char> censored;
    std::vector<double> normalized;  ///< uncensored times over their mean, in sample order
    double mean = 0.0;
    double stderr_ = 0.0;
    double ks_statistic = 0.0;
    int n_censored = 0;
};

/// Default censoring horizon 1e7 dt.
double default_escape_horizon(const SimConfig& cfg);

/// Escape times from the leftmost to the rightmost mode of d. Sample k uses
/// stream k; cfg.horizon is the censoring time. Throws NoSecondAttractor when
/// d has fewer than two modes.
EscapeSample escape_times(const ValueSolution& s, const InvariantDensity& d, const SimConfig& cfg,
                          int n_samples, Execution exec = Execution::Parallel, int jobs = 0);

/// First-passage times of dyn from x_minus to x_plus.
EscapeSample first_passage_times(const Dynamics& dyn, double x_minus, double x_plus,
                                 const SimConfig& cfg, int n_samples,
                                 Execution exec = Execution::Parallel, int jobs = 0);

/// Occupation-measure check: KS distance between the recorded states of a
/// path (after burn_in) and the invariant CDF.
double occupation_ks(const PathSample& path, const InvariantDensity& d, double burn_in);

}  // namespace lake
