#include "lake/sde.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fmt/format.h>
#include <memory>
#include <omp.h>
#include <boost/random/normal_distribution.hpp>

#include "lake/errors.hpp"
#include "lake/rng.hpp"
#include "lake/stats.hpp"

namespace lake {

namespace {

// Stream offset separating escape runs from payoff runs with the same seed.
constexpr std::uint64_t kEscapeStreams = 1ULL << 40;

constexpr int kLanes = 4;

class Noise {
public:
    Noise(std::uint64_t seed, std::uint64_t stream, int substeps)
        : rng_(seed, stream), substeps_(substeps), scale_(1.0 / std::sqrt(substeps)) {}

    double operator()() {
        if (substeps_ == 1) return normal_(rng_);
        double sum = 0.0;
        for (int k = 0; k < substeps_; ++k) sum += normal_(rng_);
        return sum * scale_;
    }

private:
    StreamRng rng_;
    boost::random::normal_distribution<double> normal_;
    int substeps_;
    double scale_;
};

void check_range(double x, double max_x) {
    if (!(x <= max_x)) {
        throw DriftEvaluationOutOfRange(
            fmt::format("simulated state {} left the range (0, {}] where the drift is defined", x, max_x), x);
    }
}

long step_count(double span, double dt) { return std::lround(std::ceil(span / dt - 1e-9)); }

template <class F>
void for_each_index(long n, Execution exec, int jobs, F&& body) {
    if (exec == Execution::Serial) {
        for (long k = 0; k < n; ++k) body(k);
        return;
    }
    std::exception_ptr error;
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (long k = 0; k < n; ++k) {
        try {
            body(k);
        } catch (...) {
#pragma omp critical(lake_ensemble_error)
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace

void validate(const SimConfig& cfg) {
    if (!(cfg.dt > 0.0) || !(cfg.horizon >= cfg.dt) || cfg.n_paths < 1 || cfg.record_every < 1 ||
        cfg.noise_substeps < 1) {
        throw PreconditionError(fmt::format(
            "simulation needs dt > 0, horizon >= dt and positive counts (dt = {}, horizon = {}, "
            "paths = {}, record_every = {}, noise_substeps = {})",
            cfg.dt, cfg.horizon, cfg.n_paths, cfg.record_every, cfg.noise_substeps));
    }
}

Control optimal_control(const ValueSolution& s) {
    auto policy = std::make_shared<const Policy>(s);
    return [policy](double x) { return (*policy)(x); };
}

Control bounded_feedback_control(const ValidatedParams& p) {
    return [p](double x) { return std::max(1.0, x) / (1 + x * x) + p.rate().limit() - p.r(x); };
}

Control truncated_control(const ValueSolution& s, double N) {
    if (!(N > 0.0)) throw PreconditionError(fmt::format("truncation level must be positive, got {}", N));
    auto policy = std::make_shared<const Policy>(s);
    return [policy, N](double x) { return std::min((*policy)(x), N); };
}

Control constant_control(double u0) {
    if (!(u0 > 0.0)) throw PreconditionError(fmt::format("constant control must be positive, got {}", u0));
    return [u0](double) { return u0; };
}

Dynamics controlled_dynamics(const ValueSolution& s, const Control& u) {
    const auto p = s.params;
    return {[p, u](double x) { return u(x) - p.b() * x + p.r(x); }, p.sigma(), 100.0 * s.grid.l};
}

PathSample simulate_path(const Dynamics& dyn, const SimConfig& cfg, double x0, std::uint64_t path_index) {
    validate(cfg);
    if (!(x0 > 0.0)) throw PreconditionError(fmt::format("initial state must be positive, got {}", x0));
    const long steps = step_count(cfg.horizon, cfg.dt);
    const double drift_shift = 0.5 * dyn.sigma * dyn.sigma;
    const double vol = dyn.sigma * std::sqrt(cfg.dt);
    Noise noise(cfg.seed, path_index, cfg.noise_substeps);

    PathSample out;
    out.seed = cfg.seed;
    out.path_index = path_index;
    out.times.reserve(steps / cfg.record_every + 2);
    out.states.reserve(steps / cfg.record_every + 2);
    out.times.push_back(0.0);
    out.states.push_back(x0);
    double y = std::log(x0);
    for (long k = 1; k <= steps; ++k) {
        const double x = std::exp(y);
        check_range(x, dyn.max_x);
        y += (dyn.drift(x) / x - drift_shift) * cfg.dt + vol * noise();
        if (k % cfg.record_every == 0) {
            out.times.push_back(k * cfg.dt);
            out.states.push_back(std::exp(y));
        }
    }
    return out;
}

PathSample simulate_path(const ValueSolution& s, const SimConfig& cfg, double x0, std::uint64_t path_index) {
    auto path = simulate_path(controlled_dynamics(s, optimal_control(s)), cfg, x0, path_index);
    path.params = s.params.params();
    return path;
}

PayoffHorizon payoff_horizon(const ValueSolution& s, const Control& u, double eps) {
    const auto& p = s.params;
    PayoffHorizon h;
    constexpr int kSamples = 4000;
    for (int k = 0; k <= kSamples; ++k) {
        const double x = s.grid.l * k / kSamples;
        h.S = std::max(h.S, std::abs(std::log(u(x)) - p.c() * x * x));
    }
    h.T = std::max(0.0, std::log(h.S / (p.rho() * eps)) / p.rho());
    h.bias = h.S * std::exp(-p.rho() * h.T) / p.rho();
    return h;
}

MonteCarloEstimate estimate_payoff_mc(const ValueSolution& s, const Control& u, const SimConfig& cfg,
                                      double x0, double eps, Execution exec, int jobs) {
    validate(cfg);
    if (!(x0 > 0.0)) throw PreconditionError(fmt::format("initial state must be positive, got {}", x0));
    const auto& p = s.params;
    const auto horizon = payoff_horizon(s, u, eps);
    const long steps = std::max(1L, step_count(horizon.T, cfg.dt));
    const double max_x = 100.0 * s.grid.l;
    const double drift_shift = 0.5 * p.sigma() * p.sigma();
    const double vol = p.sigma() * std::sqrt(cfg.dt);
    const double decay = std::exp(-p.rho() * cfg.dt);

    MonteCarloEstimate out;
    out.n_paths = cfg.n_paths;
    out.T_cutoff = steps * cfg.dt;
    out.bias = horizon.bias;
    out.payoffs.assign(cfg.n_paths, 0.0);
    // Paths advance in interleaved groups so the long dependency chain of one
    // path overlaps with the others; each path's arithmetic is unchanged.
    const long groups = (cfg.n_paths + kLanes - 1) / kLanes;
    for_each_index(groups, exec, jobs, [&](long group) {
        const int first = static_cast<int>(group * kLanes);
        const int lanes = std::min(kLanes, cfg.n_paths - first);
        std::vector<Noise> noise;
        for (int j = 0; j < lanes; ++j) noise.emplace_back(cfg.seed, first + j, cfg.noise_substeps);
        double y[kLanes], acc[kLanes];
        std::fill_n(y, kLanes, std::log(x0));
        std::fill_n(acc, kLanes, 0.0);
        double discount = 1.0;
        for (long k = 0; k < steps; ++k) {
            for (int j = 0; j < lanes; ++j) {
                const double x = std::exp(y[j]);
                check_range(x, max_x);
                const double control = u(x);
                acc[j] += discount * (std::log(control) - p.c() * x * x);
                y[j] += ((control - p.b() * x + p.r(x)) / x - drift_shift) * cfg.dt + vol * noise[j]();
            }
            discount *= decay;
        }
        for (int j = 0; j < lanes; ++j) out.payoffs[first + j] = acc[j] * cfg.dt;
    });
    const auto ms = mean_stderr(out.payoffs);
    out.mean = ms.mean;
    out.stderr_ = ms.stderr_;
    return out;
}

MonteCarloEstimate estimate_value_mc(const ValueSolution& s, const SimConfig& cfg, double x0, double eps,
                                     Execution exec, int jobs) {
    return estimate_payoff_mc(s, optimal_control(s), cfg, x0, eps, exec, jobs);
}

MonteCarloEstimate truncated_policy_value(const ValueSolution& s, double N, const SimConfig& cfg, double x0,
                                          double eps, Execution exec, int jobs) {
    return estimate_payoff_mc(s, truncated_control(s, N), cfg, x0, eps, exec, jobs);
}

double truncation_gap_bound(const ValidatedParams& p, double N) {
    return (p.rho() + p.b()) * (p.rho() + p.b()) / (4 * p.rho() * p.c() * N * N);
}

double default_escape_horizon(const SimConfig& cfg) { return 1e7 * cfg.dt; }

EscapeSample first_passage_times(const Dynamics& dyn, double x_minus, double x_plus, const SimConfig& cfg,
                                 int n_samples, Execution exec, int jobs) {
    validate(cfg);
    if (!(x_minus > 0.0 && x_minus < x_plus)) {
        throw PreconditionError(fmt::format("escape needs 0 < x- < x+, got {} and {}", x_minus, x_plus));
    }
    if (n_samples < 1) throw PreconditionError("escape needs at least one sample");
    const long max_steps = step_count(cfg.horizon, cfg.dt);
    const double drift_shift = 0.5 * dyn.sigma * dyn.sigma;
    const double vol = dyn.sigma * std::sqrt(cfg.dt);
    const double y_plus = std::log(x_plus);

    EscapeSample out;
    out.x_minus = x_minus;
    out.x_plus = x_plus;
    out.horizon = max_steps * cfg.dt;
    out.times.assign(n_samples, 0.0);
    out.censored.assign(n_samples, 0);
    for_each_index(n_samples, exec, jobs, [&](long sample) {
        Noise noise(cfg.seed, kEscapeStreams + static_cast<std::uint64_t>(sample), cfg.noise_substeps);
        double y = std::log(x_minus);
        long k = 0;
        while (y < y_plus && k < max_steps) {
            const double x = std::exp(y);
            check_range(x, dyn.max_x);
            y += (dyn.drift(x) / x - drift_shift) * cfg.dt + vol * noise();
            ++k;
        }
        out.times[sample] = k * cfg.dt;
        out.censored[sample] = y < y_plus;
    });

    std::vector<double> done;
    for (int k = 0; k < n_samples; ++k) {
        if (out.censored[k]) {
            ++out.n_censored;
        } else {
            done.push_back(out.times[k]);
        }
    }
    const auto ms = mean_stderr(done);
    out.mean = ms.mean;
    out.stderr_ = ms.stderr_;
    for (double t : done) out.normalized.push_back(t / out.mean);
    out.ks_statistic = done.empty() ? 1.0 : ks_exponential(out.normalized);
    return out;
}

EscapeSample escape_times(const ValueSolution& s, const InvariantDensity& d, const SimConfig& cfg, int n_samples,
                          Execution exec, int jobs) {
    if (d.modes.size() < 2) {
        throw NoSecondAttractor(fmt::format("escape needs two stochastic attractors, found {} mode(s)",
                                            d.modes.size()));
    }
    return first_passage_times(controlled_dynamics(s, optimal_control(s)), d.modes.front(), d.modes.back(),
                               cfg, n_samples, exec, jobs);
}

double occupation_ks(const PathSample& path, const InvariantDensity& d, double burn_in) {
    std::vector<double> states;
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        if (path.times[k] >= burn_in) states.push_back(path.states[k]);
    }
    if (states.empty()) throw PreconditionError("no recorded states after the burn-in time");
    return ks_distance(states, [&d](double x) { return d.cdf(x); });
}

}  // namespace lake
