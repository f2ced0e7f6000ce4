#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lake/errors.hpp"
#include "lake/invariant.hpp"

namespace lake {
namespace {

ValueSolution solved(double b, double c, double rho, double sigma, int n = 4000) {
    const auto p = validate_params({b, c, rho, sigma, RecyclingRate::standard()});
    return solve(build_grid(p, default_right_endpoint(p), n), p);
}

const ValueSolution& fig2() {
    static const auto s = solved(0.65, 0.5, 0.03, 0.1);
    return s;
}

const InvariantDensity& fig2_density() {
    static const auto d = invariant_density(fig2());
    return d;
}

TEST(InverseSquareIntegral, ConstantIntegrandMatchesAntiderivative) {
    std::vector<double> mesh;
    for (int k = 0; k <= 500; ++k) mesh.push_back(1e-5 * std::pow(1e7, k / 500.0));
    const std::vector<double> g(mesh.size(), 0.37);
    const auto out = inverse_square_integral(mesh, g);
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        const double exact = 0.37 * (1 / mesh[k] - 1 / mesh.back());
        EXPECT_NEAR(out[k], exact, 1e-8 * std::max(1.0, exact)) << k;
    }
}

TEST(InverseSquareIntegral, ExactForLinearIntegrand) {
    const std::vector<double> mesh{0.5, 0.7, 1.3, 2.0, 4.0};
    std::vector<double> g;
    for (double x : mesh) g.push_back(2.0 + 3.0 * x);
    const auto out = inverse_square_integral(mesh, g);
    // Integral of (2 + 3u)/u^2 = -2/u + 3 ln u.
    auto anti = [](double u) { return -2.0 / u + 3.0 * std::log(u); };
    for (std::size_t k = 0; k < mesh.size(); ++k) EXPECT_NEAR(out[k], anti(4.0) - anti(mesh[k]), 1e-13);
}

TEST(PhiTail, MatchesNumericalQuadrature) {
    const double a = 0.9, C = 0.4, A = 0.38, s = 1.47;
    for (double X : {2.0, 20.0, 800.0, 1e4}) {
        // Substitute u = X / t and integrate over t in (0, 1] with the midpoint rule.
        const int m = 200000;
        double q = 0.0;
        for (int k = 0; k < m; ++k) {
            const double t = (k + 0.5) / m;
            const double u = X / t;
            q += (a - C / u + 1.0 / (2 * A * (u + s))) / (u * u) * (X / (t * t)) / m;
        }
        EXPECT_NEAR(phi_tail(a, C, A, s, X), q, 1e-8 * q) << X;
    }
}

TEST(PhiTail, SeriesBranchIsContinuous) {
    const double X = 1000.0;
    const double below = phi_tail(1.0, 0.0, 0.4, std::nextafter(1e-3 * X, 0.0), X);
    const double above = phi_tail(1.0, 0.0, 0.4, 1e-3 * X, X);
    EXPECT_NEAR(below, above, 1e-12 * above);
    EXPECT_NEAR(phi_tail(0.0, 0.0, 0.5, 0.0, 2.0), 1.0 / 8.0, 1e-16);
}

TEST(PhiSigma, LimitsAtBothEnds) {
    const auto& s = fig2();
    const PhiSigma phi(s);
    const double expected = std::exp(s.params.rho() * s.v[0] + 1.0);
    EXPECT_NEAR(1e-4 * phi(1e-4), expected, 0.05 * expected);
    EXPECT_LT(phi(1e3), 2e-3);
    EXPECT_LT(phi(1e6), 2e-6);
    EXPECT_GT(phi(1e6), 0.0);
}

TEST(PhiSigma, DecreasingAndConsistentWithMeshValues) {
    const PhiSigma phi(fig2());
    const auto& mesh = phi.mesh();
    for (std::size_t k = 0; k < mesh.size(); k += 37) {
        EXPECT_NEAR(phi(mesh[k]), phi.values()[k], 1e-12 * phi.values()[k]);
        if (k + 1 < mesh.size()) {
            const double mid = 0.5 * (mesh[k] + mesh[k + 1]);
            EXPECT_LT(phi(mid), phi.values()[k]);
            EXPECT_GT(phi(mid), phi.values()[k + 1]);
        }
    }
    EXPECT_TRUE(std::isfinite(phi(1e-8)));
    EXPECT_GT(phi(1e-8), phi(mesh.front()));
}

TEST(PhiSigma, RejectsNonpositive) {
    EXPECT_THROW(phi_sigma(fig2(), 0.0), PreconditionError);
    EXPECT_THROW(phi_sigma(fig2(), -1.0), PreconditionError);
}

TEST(DriftField, SignsAndRange) {
    const auto& s = fig2();
    const DriftField h(s);
    EXPECT_GT(h(1e-6), 0.0);
    EXPECT_LT(h(s.grid.l), 0.0);
    EXPECT_LT(h(50 * s.grid.l), 0.0);
    EXPECT_THROW(h(101 * s.grid.l), DriftEvaluationOutOfRange);
    EXPECT_THROW(h(-1.0), DriftEvaluationOutOfRange);
    try {
        h(200 * s.grid.l);
    } catch (const DriftEvaluationOutOfRange& e) {
        EXPECT_EQ(e.x(), 200 * s.grid.l);
    }
}

TEST(FindExtrema, MonotoneHasNone) {
    std::vector<double> x, v;
    for (int k = 0; k < 100; ++k) {
        x.push_back(k * 0.1);
        v.push_back(-std::pow(k * 0.1, 3));
    }
    const auto e = find_extrema(x, v);
    EXPECT_TRUE(e.modes.empty());
    EXPECT_TRUE(e.antimodes.empty());
}

TEST(FindExtrema, RecoversDoubleGaussianCenters) {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> jitter(-0.3, 0.3);
    std::vector<double> x;
    for (int k = 0; k < 2000; ++k) x.push_back((k + jitter(gen)) * 1e-3);  // nonuniform
    std::sort(x.begin(), x.end());
    const double c1 = 0.4123, c2 = 1.3789;
    std::vector<double> v;
    for (double xi : x) {
        v.push_back(std::exp(-std::pow((xi - c1) / 0.1, 2)) + 0.6 * std::exp(-std::pow((xi - c2) / 0.15, 2)));
    }
    const auto e = find_extrema(x, v);
    ASSERT_EQ(e.modes.size(), 2u);
    ASSERT_EQ(e.antimodes.size(), 1u);
    EXPECT_NEAR(e.modes[0], c1, 1e-3);
    EXPECT_NEAR(e.modes[1], c2, 1e-3);
    EXPECT_GT(e.antimodes[0], c1);
    EXPECT_LT(e.antimodes[0], c2);
}

TEST(FindExtrema, PlateauMergedToMidpoint) {
    const std::vector<double> x{0, 1, 2, 3, 4, 5, 6};
    const std::vector<double> v{0, 1, 2, 2, 2, 1, 0};
    const auto e = find_extrema(x, v);
    ASSERT_EQ(e.modes.size(), 1u);
    EXPECT_EQ(e.modes[0], 3.0);
}

TEST(FindExtrema, IgnoresRoundoffRipples) {
    std::vector<double> x, v;
    for (int k = 0; k < 400; ++k) {
        x.push_back(k * 0.01);
        // A single broad maximum plus ripples far below the relative margin.
        v.push_back(-100.0 - std::pow(k * 0.01 - 2.0, 2) + ((k % 2) ? 1e-13 : -1e-13));
    }
    const auto e = find_extrema(x, v);
    ASSERT_EQ(e.modes.size(), 1u);
    EXPECT_NEAR(e.modes[0], 2.0, 0.01);
    EXPECT_TRUE(e.antimodes.empty());
}

TEST(FindExtrema, ModesAndAntimodesInterleave) {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x, v;
        const int bumps = 1 + trial % 4;
        std::vector<double> centers, widths, heights;
        for (int j = 0; j < bumps; ++j) {
            centers.push_back(5 * unit(gen));
            widths.push_back(0.1 + 0.4 * unit(gen));
            heights.push_back(0.2 + unit(gen));
        }
        for (int k = 0; k < 3000; ++k) {
            const double xi = k * 5e-3 - 1;
            double val = 0;
            for (int j = 0; j < bumps; ++j) val += heights[j] * std::exp(-std::pow((xi - centers[j]) / widths[j], 2));
            x.push_back(xi);
            v.push_back(val);
        }
        const auto e = find_extrema(x, v);
        ASSERT_GE(e.modes.size(), 1u);
        ASSERT_EQ(e.modes.size(), e.antimodes.size() + 1);
        for (std::size_t j = 0; j < e.antimodes.size(); ++j) {
            EXPECT_LT(e.modes[j], e.antimodes[j]);
            EXPECT_LT(e.antimodes[j], e.modes[j + 1]);
        }
    }
}

TEST(InvariantDensity, NormalizedCdfAndPositivity) {
    const auto& d = fig2_density();
    EXPECT_LT(d.diagnostics.normalization_error, 1e-6);
    EXPECT_EQ(d.F.front(), 0.0);
    EXPECT_EQ(d.F.back(), 1.0);
    EXPECT_TRUE(std::is_sorted(d.F.begin(), d.F.end()));
    for (double fk : d.f) EXPECT_GE(fk, 0.0);
    EXPECT_EQ(d.mesh.size(), d.diagnostics.mesh_size);
    EXPECT_EQ(d.cdf(0.0), 0.0);
    EXPECT_EQ(d.cdf(1e9), 1.0);
    EXPECT_NEAR(d.cdf(d.mesh[100]), d.F[100], 1e-15);
}

TEST(InvariantDensity, TailDiagnostics) {
    const auto& d = fig2_density();
    EXPECT_NEAR(d.diagnostics.tail_slope_expected, -132.0, 1e-9);
    EXPECT_NEAR(d.diagnostics.tail_slope, -132.0, 0.02 * 132.0);
    EXPECT_NEAR(d.diagnostics.left_limit_value, d.diagnostics.left_limit_expected,
                0.05 * d.diagnostics.left_limit_expected);
}

TEST(InvariantDensity, BimodalAtSmallNoise) {
    const auto& d = fig2_density();
    ASSERT_EQ(d.modes.size(), 2u);
    ASSERT_EQ(d.antimodes.size(), 1u);
    EXPECT_LT(d.modes[0], d.antimodes[0]);
    EXPECT_LT(d.antimodes[0], d.modes[1]);
    EXPECT_EQ(d.mode_label(0), "oligotrophic");
    EXPECT_EQ(d.mode_label(1), "eutrophic");
}

TEST(InvariantDensity, UnimodalOligotrophicAtLargeNoise) {
    const auto d = invariant_density(solved(0.65, 0.5, 0.03, 0.6));
    ASSERT_EQ(d.modes.size(), 1u);
    EXPECT_TRUE(d.antimodes.empty());
    EXPECT_LT(d.modes[0], fig2_density().antimodes[0]);
    EXPECT_EQ(d.mode_label(0), "unique");
}

TEST(InvariantDensity, SingleModeMovesLeftWithNoise) {
    double previous = 1e300;
    for (double sigma : {0.1, 0.2, 0.3, 0.4}) {
        const auto d = invariant_density(solved(0.8, 0.5, 0.03, sigma));
        ASSERT_EQ(d.modes.size(), 1u) << sigma;
        EXPECT_LT(d.modes[0], previous);
        previous = d.modes[0];
    }
}

TEST(InvariantDensity, ModesSitAtZerosOfCorrectedDrift) {
    // d ln I / dx = (2h/sigma^2 - x) / x^2 vanishes where h(x) = sigma^2 x / 2.
    const auto& s = fig2();
    const auto& d = fig2_density();
    const DriftField h(s);
    const double s2 = s.params.sigma() * s.params.sigma();
    const double w = 5 * s.grid.dx;
    for (double m : d.modes) {
        EXPECT_GT(h(m - w) - s2 * (m - w) / 2, 0.0) << m;
        EXPECT_LT(h(m + w) - s2 * (m + w) / 2, 0.0) << m;
    }
    for (double m : d.antimodes) {
        EXPECT_LT(h(m - w) - s2 * (m - w) / 2, 0.0) << m;
        EXPECT_GT(h(m + w) - s2 * (m + w) / 2, 0.0) << m;
    }
}

TEST(InvariantDensity, StableUnderMeshRefinement) {
    const auto& coarse = fig2_density();
    const auto fine = invariant_density(fig2(), MeshSpec{}.refined());
    ASSERT_GT(fine.mesh.size(), coarse.mesh.size());
    double worst = 0.0;
    std::size_t matched = 0;
    for (std::size_t k = 0; k < coarse.mesh.size() && coarse.mesh[k] <= fig2().grid.l; ++k) {
        const auto it = std::lower_bound(fine.mesh.begin(), fine.mesh.end(), coarse.mesh[k] * (1 - 1e-12));
        ASSERT_NE(it, fine.mesh.end());
        ASSERT_NEAR(*it, coarse.mesh[k], 1e-12 * coarse.mesh[k]);
        worst = std::max(worst, std::abs(fine.f[it - fine.mesh.begin()] - coarse.f[k]));
        ++matched;
    }
    EXPECT_GT(matched, 10000u);
    EXPECT_LT(worst, 1e-4);
    ASSERT_EQ(fine.modes.size(), coarse.modes.size());
    for (std::size_t j = 0; j < fine.modes.size(); ++j) EXPECT_NEAR(fine.modes[j], coarse.modes[j], 1e-3);
}

TEST(InvariantDensity, NeedsNoise) {
    EXPECT_THROW(invariant_density(solved(0.65, 0.5, 0.03, 0.0)), PreconditionError);
}

TEST(Sweep, Linspace) {
    EXPECT_EQ(linspace(1.0, 2.0, 1), std::vector<double>{1.0});
    const auto v = linspace(0.2, 1.2, 11);
    EXPECT_EQ(v.front(), 0.2);
    EXPECT_EQ(v.back(), 1.2);
    EXPECT_NEAR(v[5], 0.7, 1e-15);
    EXPECT_THROW(linspace(0, 1, 0), PreconditionError);
}

TEST(Sweep, ParameterNames) {
    for (auto p : {SweepParameter::Sigma, SweepParameter::C, SweepParameter::Rho}) {
        EXPECT_EQ(sweep_parameter_from_string(to_string(p)), p);
    }
    EXPECT_THROW(sweep_parameter_from_string("b"), PreconditionError);
}

TEST(Sweep, SingletonMatchesDirectRun) {
    const LakeParams base{0.65, 0.5, 0.03, 0.3, RecyclingRate::standard()};
    const auto r = bifurcation_sweep_serial(base, {SweepParameter::Sigma, {0.1}});
    ASSERT_EQ(r.points.size(), 1u);
    ASSERT_TRUE(r.points[0].ok);
    EXPECT_EQ(r.points[0].modes, fig2_density().modes);
    EXPECT_EQ(r.points[0].antimodes, fig2_density().antimodes);
    EXPECT_EQ(r.points[0].V0, fig2().v[0]);
}

TEST(Sweep, ParallelMatchesSerialAndRecordsFailures) {
    const LakeParams base{0.65, 0.5, 0.03, 0.1, RecyclingRate::standard()};
    // sigma = 1.2 violates sigma^2 < rho + 2b; values arrive unsorted.
    const SweepSpec spec{SweepParameter::Sigma, {0.3, 1.2, 0.1, 0.6}};
    const auto serial = bifurcation_sweep_serial(base, spec);
    const auto parallel = bifurcation_sweep(base, spec, {}, 3);
    ASSERT_EQ(serial.points.size(), 4u);
    EXPECT_FALSE(serial.complete());
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& a = serial.points[k];
        const auto& b = parallel.points[k];
        EXPECT_EQ(a.value, b.value);
        EXPECT_EQ(a.ok, b.ok);
        EXPECT_EQ(a.modes, b.modes);
        EXPECT_EQ(a.antimodes, b.antimodes);
        EXPECT_EQ(a.V0, b.V0);
        if (k > 0) EXPECT_LT(serial.points[k - 1].value, a.value);
    }
    EXPECT_FALSE(serial.points[3].ok);
    EXPECT_EQ(serial.points[3].error_kind, "FinitenessViolation");
    EXPECT_EQ(serial.points[0].modes.size(), 2u);
    EXPECT_EQ(serial.points[2].modes.size(), 1u);
}

TEST(Sweep, CostAndDiscountShiftAttractors) {
    const LakeParams base_c{0.65, 0.5, 0.03, 0.1, RecyclingRate::standard()};
    const auto by_c = bifurcation_sweep(base_c, {SweepParameter::C, linspace(0.2, 1.2, 6)});
    ASSERT_TRUE(by_c.complete());
    for (std::size_t k = 1; k < by_c.points.size(); ++k) {
        EXPECT_LE(by_c.points[k].modes.back(), by_c.points[k - 1].modes.back() + 1e-9);
        EXPECT_LE(by_c.points[k].modes.front(), by_c.points[k - 1].modes.front() + 1e-9);
    }
    const LakeParams base_rho{0.65, 0.8, 0.03, 0.1, RecyclingRate::standard()};
    const auto by_rho = bifurcation_sweep(base_rho, {SweepParameter::Rho, linspace(0.01, 0.1, 5)});
    ASSERT_TRUE(by_rho.complete());
    for (std::size_t k = 1; k < by_rho.points.size(); ++k) {
        EXPECT_GE(by_rho.points[k].modes.back(), by_rho.points[k - 1].modes.back() - 1e-9);
        EXPECT_GE(by_rho.points[k].modes.front(), by_rho.points[k - 1].modes.front() - 1e-9);
    }
}

}  // namespace
}  // namespace lake
