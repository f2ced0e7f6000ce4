#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "lake/errors.hpp"
#include "lake/rng.hpp"
#include "lake/sde.hpp"
#include "lake/stats.hpp"

namespace lake {
namespace {

ValueSolution solved(double b, double c, double rho, double sigma) {
    const auto p = validate_params({b, c, rho, sigma, RecyclingRate::standard()});
    return solve(build_grid(p, default_right_endpoint(p), 4000), p);
}

// Heavy discounting keeps the payoff horizon short.
const ValueSolution& impatient() {
    static const auto s = solved(0.65, 0.5, 0.5, 0.1);
    return s;
}

Dynamics brownian(double sigma) { return {[](double) { return 0.0; }, sigma, 1e300}; }

// dy = (y - y^3) dt + sigma dW: wells at y = -1 and 1, barrier at 0.
Dynamics double_well(double sigma) {
    return {[sigma](double x) {
                const double y = std::log(x);
                return x * (y - y * y * y + 0.5 * sigma * sigma);
            },
            sigma, 1e6};
}

TEST(StreamRng, ReproducibleAndIndependentStreams) {
    StreamRng a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    std::set<std::uint64_t> seen;
    for (int k = 0; k < 1000; ++k) {
        const auto x = a();
        EXPECT_EQ(x, b());
        EXPECT_NE(x, c());
        EXPECT_NE(x, d());
        seen.insert(x);
    }
    EXPECT_EQ(seen.size(), 1000u);
    EXPECT_EQ(a.counter(), 1000u);
}

TEST(StreamRng, RoughlyUniformBits) {
    StreamRng g(1, 0);
    double mean = 0.0;
    int ones = 0;
    constexpr int n = 100000;
    for (int k = 0; k < n; ++k) {
        const auto x = g();
        mean += static_cast<double>(x >> 11) * 0x1.0p-53 / n;
        ones += __builtin_popcountll(x);
    }
    EXPECT_NEAR(mean, 0.5, 0.005);
    EXPECT_NEAR(ones / (64.0 * n), 0.5, 0.001);
}

TEST(Stats, MeanStderr) {
    const std::vector<double> v{1, 2, 3, 4};
    const auto m = mean_stderr(v);
    EXPECT_DOUBLE_EQ(m.mean, 2.5);
    EXPECT_DOUBLE_EQ(m.stderr_, std::sqrt(5.0 / 3.0 / 4.0));
    EXPECT_EQ(mean_stderr(std::vector<double>{3.0}).stderr_, 0.0);
}

TEST(Stats, KolmogorovSmirnov) {
    // Exact quantiles at (i - 1/2)/n give distance 1/(2n).
    std::vector<double> q;
    const int n = 200;
    for (int i = 1; i <= n; ++i) q.push_back(-std::log1p(-(i - 0.5) / n));
    EXPECT_NEAR(ks_exponential(q), 0.5 / n, 1e-12);
    const std::vector<double> single{std::log(2.0)};
    EXPECT_NEAR(ks_exponential(single), 0.5, 1e-15);
    const std::vector<double> u{0.1, 0.2, 0.3};
    EXPECT_NEAR(ks_distance(u, [](double x) { return std::clamp(x, 0.0, 1.0); }), 1.0 - 0.3, 1e-15);
}

TEST(SimConfig, Validation) {
    EXPECT_NO_THROW(validate(SimConfig{}));
    EXPECT_THROW(validate(SimConfig{0.0}), PreconditionError);
    EXPECT_THROW(validate(SimConfig{1e-3, 1e-4}), PreconditionError);
    EXPECT_THROW(validate(SimConfig{1e-3, 1.0, 1, 0}), PreconditionError);
    EXPECT_THROW(validate(SimConfig{1e-3, 1.0, 1, 1, 0}), PreconditionError);
}

TEST(SimulatePath, PositiveDeterministicAndRecorded) {
    const auto& s = impatient();
    const SimConfig cfg{1e-3, 5.0, 99, 1, 10};
    const auto a = simulate_path(s, cfg, 1.0, 3);
    const auto b = simulate_path(s, cfg, 1.0, 3);
    const auto c = simulate_path(s, cfg, 1.0, 4);
    ASSERT_EQ(a.states.size(), 501u);
    EXPECT_EQ(a.states, b.states);
    EXPECT_NE(a.states, c.states);
    EXPECT_EQ(a.states.front(), 1.0);
    EXPECT_NEAR(a.times[7], 0.07, 1e-15);
    EXPECT_EQ(a.seed, 99u);
    EXPECT_EQ(a.path_index, 3u);
    EXPECT_EQ(a.params.rho, 0.5);
    for (double x : a.states) EXPECT_GT(x, 0.0);
    EXPECT_THROW(simulate_path(s, cfg, 0.0), PreconditionError);
}

TEST(SimulatePath, ZeroDriftIsGeometricBrownianMotion) {
    const double sigma = 0.5, T = 1.0;
    std::vector<double> dy;
    for (int k = 0; k < 2000; ++k) {
        const auto p = simulate_path(brownian(sigma), SimConfig{1e-2, T, 5, 1, 100}, 2.0, k);
        dy.push_back(std::log(p.states.back()) - std::log(2.0));
    }
    const auto m = mean_stderr(dy);
    EXPECT_NEAR(m.mean, -sigma * sigma * T / 2, 3 * m.stderr_);
    EXPECT_NEAR(m.stderr_ * std::sqrt(2000.0), sigma * std::sqrt(T), 0.05);
}

TEST(SimulatePath, NoiseSubstepsShareTheBrownianPath) {
    const auto fine = simulate_path(brownian(0.3), SimConfig{5e-4, 1.0, 8, 1, 2000}, 1.0, 0);
    const auto coarse = simulate_path(brownian(0.3), SimConfig{1e-3, 1.0, 8, 1, 1000, 2}, 1.0, 0);
    EXPECT_NEAR(std::log(fine.states.back()), std::log(coarse.states.back()), 1e-12);
}

TEST(SimulatePath, LeavingTheDriftRangeThrows) {
    const Dynamics runaway{[](double x) { return 5.0 * x; }, 0.1, 10.0};
    EXPECT_THROW(simulate_path(runaway, SimConfig{1e-2, 10.0}, 1.0), DriftEvaluationOutOfRange);
}

TEST(PayoffMc, ParallelMatchesSerialBitwise) {
    const auto& s = impatient();
    const SimConfig cfg{1e-3, 1.0, 11, 10};
    const auto serial = estimate_value_mc(s, cfg, 1.0, 1e-3, Execution::Serial);
    const auto parallel = estimate_value_mc(s, cfg, 1.0, 1e-3, Execution::Parallel, 3);
    EXPECT_EQ(serial.payoffs, parallel.payoffs);
    EXPECT_EQ(serial.mean, parallel.mean);
    EXPECT_EQ(serial.stderr_, parallel.stderr_);
    // Interleaving does not change a path: the first path alone gives the same payoff.
    const auto alone = estimate_value_mc(s, SimConfig{1e-3, 1.0, 11, 1}, 1.0, 1e-3, Execution::Serial);
    EXPECT_EQ(alone.payoffs[0], serial.payoffs[0]);
}

TEST(PayoffMc, HorizonAndBias) {
    const auto& s = impatient();
    const auto h = payoff_horizon(s, optimal_control(s), 1e-3);
    EXPECT_NEAR(h.bias, 1e-3, 1e-12);
    EXPECT_NEAR(h.S * std::exp(-0.5 * h.T) / 0.5, 1e-3, 1e-12);
    EXPECT_GE(h.S, std::abs(std::log(optimal_control(s)(0.0))));
}

TEST(PayoffMc, MatchesSolverValue) {
    const auto& s = impatient();
    const auto est = estimate_value_mc(s, SimConfig{1e-3, 1.0, 2024, 400}, 1.0);
    EXPECT_LE(std::abs(est.mean - s.value_at(1.0)), 3 * est.stderr_ + est.bias)
        << est.mean << " vs " << s.value_at(1.0);
}

TEST(PayoffMc, SuboptimalControlsAreDominated) {
    const auto& s = impatient();
    const SimConfig cfg{1e-3, 1.0, 7, 200};
    const double v = s.value_at(1.0);
    for (const auto& u : {bounded_feedback_control(s.params), constant_control(0.2), constant_control(1.0)}) {
        const auto est = estimate_payoff_mc(s, u, cfg, 1.0);
        EXPECT_LE(est.mean, v + 3 * est.stderr_ + est.bias);
    }
}

TEST(PayoffMc, TruncationSandwich) {
    const auto& s = impatient();
    const SimConfig cfg{1e-3, 1.0, 3, 200};
    const auto full = estimate_value_mc(s, cfg, 1.0);
    const auto untouched = truncated_policy_value(s, 1e6, cfg, 1.0);
    EXPECT_EQ(full.payoffs, untouched.payoffs);

    const double peak = *std::max_element(s.policy.begin(), s.policy.end());
    const double N = peak / 2;
    const auto trunc = truncated_policy_value(s, N, cfg, 1.0);
    const double gap = s.value_at(1.0) - trunc.mean;
    EXPECT_GE(gap, -3 * trunc.stderr_);
    EXPECT_LE(gap, truncation_gap_bound(s.params, N) + 3 * trunc.stderr_ + trunc.bias);
    EXPECT_THROW(truncated_control(s, 0.0), PreconditionError);
}

TEST(PayoffMc, VanishingNoiseMatchesOdeQuadrature) {
    const auto s = solved(0.65, 0.5, 0.5, 1e-4);
    const SimConfig cfg{1e-3, 1.0, 1, 8};
    const auto est = estimate_value_mc(s, cfg, 1.0);
    // Same left-endpoint quadrature along the deterministic Euler path in y.
    const auto u = optimal_control(s);
    const auto& p = s.params;
    const long steps = std::lround(est.T_cutoff / cfg.dt);
    double y = 0.0, discount = 1.0, acc = 0.0;
    for (long k = 0; k < steps; ++k) {
        const double x = std::exp(y);
        acc += discount * (std::log(u(x)) - p.c() * x * x);
        discount *= std::exp(-p.rho() * cfg.dt);
        y += (u(x) - p.b() * x + p.r(x)) / x * cfg.dt;
    }
    EXPECT_NEAR(est.mean, acc * cfg.dt, 1e-3);
}

TEST(PayoffMc, TimeStepRefinementOnMatchedNoise) {
    const auto& s = impatient();
    const auto coarse = estimate_value_mc(s, SimConfig{2e-3, 1.0, 13, 100, 1, 2}, 1.0);
    const auto fine = estimate_value_mc(s, SimConfig{1e-3, 1.0, 13, 100, 1, 1}, 1.0);
    const double combined = std::hypot(coarse.stderr_, fine.stderr_);
    EXPECT_LT(std::abs(coarse.mean - fine.mean), 3 * combined);
}

TEST(Escape, SingleSampleNormalizesToOne) {
    const auto e = first_passage_times(double_well(0.35), std::exp(-1.0), std::exp(1.0),
                                       SimConfig{1e-2, 1e6, 3}, 1);
    ASSERT_EQ(e.n_censored, 0);
    EXPECT_EQ(e.mean, e.times[0]);
    EXPECT_EQ(e.normalized, std::vector<double>{1.0});
}

TEST(Escape, DoubleWellTimesAreExponential) {
    const int n = 300;
    const auto serial = first_passage_times(double_well(0.35), std::exp(-1.0), std::exp(1.0),
                                            SimConfig{1e-2, 1e6, 17}, n, Execution::Serial);
    const auto parallel = first_passage_times(double_well(0.35), std::exp(-1.0), std::exp(1.0),
                                              SimConfig{1e-2, 1e6, 17}, n, Execution::Parallel, 2);
    EXPECT_EQ(serial.times, parallel.times);
    EXPECT_EQ(serial.n_censored, 0);
    EXPECT_NEAR(mean_stderr(serial.normalized).mean, 1.0, 1e-12);
    // 1% critical value of the KS statistic.
    EXPECT_LT(serial.ks_statistic, 1.63 / std::sqrt(n));
    for (double t : serial.times) EXPECT_GT(t, 0.0);
}

TEST(Escape, CensoringIsCounted) {
    const auto e = first_passage_times(double_well(0.35), std::exp(-1.0), std::exp(1.0),
                                       SimConfig{1e-2, 0.5, 17}, 20);
    EXPECT_EQ(e.n_censored, 20);
    EXPECT_TRUE(e.normalized.empty());
    EXPECT_EQ(e.ks_statistic, 1.0);
    for (double t : e.times) EXPECT_NEAR(t, 0.5, 1e-12);
    EXPECT_EQ(default_escape_horizon(SimConfig{}), 1e4);
}

TEST(Escape, NeedsTwoAttractors) {
    const auto s = solved(0.65, 0.5, 0.03, 0.6);
    const auto d = invariant_density(s);
    ASSERT_EQ(d.modes.size(), 1u);
    EXPECT_THROW(escape_times(s, d, SimConfig{}, 10), NoSecondAttractor);
    EXPECT_THROW(first_passage_times(brownian(0.1), 2.0, 1.0, SimConfig{}, 1), PreconditionError);
}

TEST(Occupation, LongPathFollowsInvariantLaw) {
    const auto s = solved(0.65, 0.5, 0.5, 0.3);
    const auto d = invariant_density(s);
    const auto path = simulate_path(s, SimConfig{2e-3, 2000.0, 5, 1, 50}, 1.0);
    EXPECT_LT(occupation_ks(path, d, 20.0), 0.1);
    EXPECT_THROW(occupation_ks(path, d, 1e9), PreconditionError);
}

}  // namespace
}  // namespace lake
