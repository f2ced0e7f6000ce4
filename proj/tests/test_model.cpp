#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lake/errors.hpp"
#include "lake/model.hpp"

namespace lake {
namespace {

LakeParams fig2_params() { return {0.65, 0.5, 0.03, 0.1, RecyclingRate::standard()}; }

TEST(ValidateParams, AcceptsPaperParameterSets) {
    EXPECT_NO_THROW(validate_params(fig2_params()));
    LakeParams tanh{0.8, 0.06, 0.5, 0.1, RecyclingRate::tanh_shifted(3, 1, 1)};
    EXPECT_NO_THROW(validate_params(tanh));
}

TEST(ValidateParams, FinitenessBoundaryIsRejected) {
    auto p = fig2_params();
    p.sigma = std::sqrt(1.33);
    // sigma^2 may round just below 1.33; nudge onto or past the boundary.
    if (p.sigma * p.sigma < p.rho + 2 * p.b) p.sigma = std::nextafter(p.sigma, 2.0);
    EXPECT_THROW(validate_params(p), FinitenessViolation);
    p.sigma = 1.2;
    EXPECT_THROW(validate_params(p), FinitenessViolation);
}

TEST(ValidateParams, NonpositiveParameters) {
    for (double LakeParams::*field : {&LakeParams::b, &LakeParams::c, &LakeParams::rho}) {
        auto p = fig2_params();
        p.*field = 0.0;
        EXPECT_THROW(validate_params(p), NonpositiveParameter);
        p.*field = -1.0;
        EXPECT_THROW(validate_params(p), NonpositiveParameter);
    }
    auto p = fig2_params();
    p.sigma = -0.1;
    EXPECT_THROW(validate_params(p), NonpositiveParameter);
}

TEST(ValidateParams, RecyclingChecks) {
    auto p = fig2_params();
    p.rate = RecyclingRate::step(-1.0);
    try {
        validate_params(p);
        FAIL() << "negative step threshold accepted";
    } catch (const RecyclingAssumptionViolation& e) {
        EXPECT_EQ(e.check(), "r(0)=0");
    }

    // Steep tanh centred at 0: r'(0) = scale * slope > b + rho.
    p.rate = RecyclingRate::tanh_shifted(0.0, 10.0, 1.0);
    try {
        validate_params(p);
        FAIL() << "steep rate accepted";
    } catch (const RecyclingAssumptionViolation& e) {
        EXPECT_EQ(e.check(), "small-x bound");
    }

    p.rate = RecyclingRate::tanh_shifted(3.0, -1.0, 1.0);
    EXPECT_THROW(validate_params(p), RecyclingAssumptionViolation);
}

TEST(ValidateParams, StepRateWarnsInsteadOfFailing) {
    auto p = fig2_params();
    p.rate = RecyclingRate::step(3.0);
    const auto v = validate_params(p);
    ASSERT_EQ(v.warnings().size(), 1u);
    EXPECT_NE(v.warnings()[0].find("Lipschitz"), std::string::npos);
}

TEST(ValidateParams, IdempotentAndDependsOnlyOnValues) {
    const auto p = fig2_params();
    const auto first = validate_params(p);
    const auto second = validate_params(first.params());
    EXPECT_EQ(first.b(), second.b());
    EXPECT_EQ(first.sigma(), second.sigma());
    EXPECT_EQ(first.warnings(), second.warnings());
}

TEST(RecyclingEval, KnownValues) {
    const auto standard = RecyclingRate::standard();
    EXPECT_EQ(standard(0.0), 0.0);
    EXPECT_DOUBLE_EQ(standard(1.0), 0.5);
    // tanh(0) + tanh(3) = (e^6 - 1)/(e^6 + 1)
    const auto tanh = RecyclingRate::tanh_shifted(3, 1, 1);
    EXPECT_NEAR(tanh(3.0), 0.995054753686730451, 1e-15);
    const auto step = RecyclingRate::step(3.0);
    EXPECT_EQ(step(3.0), 0.0);
    EXPECT_EQ(step(3.0000001), 1.0);
}

TEST(RecyclingLimits, ClosedForms) {
    const auto [a_std, c_std] = recycling_limits(RecyclingRate::standard());
    EXPECT_EQ(a_std, 1.0);
    EXPECT_EQ(c_std, 0.0);
    // x (1 - r(x)) = x / (1 + x^2) really does vanish.
    const auto standard = RecyclingRate::standard();
    EXPECT_NEAR(1e3 * (1.0 - standard(1e3)), 1e-3, 1e-6);
    EXPECT_LT(1e6 * (1.0 - standard(1e6)), 1e-5);

    const auto [a_tanh, c_tanh] = recycling_limits(RecyclingRate::tanh_shifted(3, 1, 0.5));
    EXPECT_NEAR(a_tanh, 0.997527376843365226, 1e-15);
    EXPECT_EQ(c_tanh, 0.0);
    EXPECT_NEAR(RecyclingRate::tanh_shifted(3, 1, 0.5)(60.0), a_tanh, 1e-15);

    const auto [a_step, c_step] = recycling_limits(RecyclingRate::step(3));
    EXPECT_EQ(a_step, 1.0);
    EXPECT_EQ(c_step, 0.0);
}

TEST(RecyclingEval, MonotoneAndBoundedOnRandomMeshes) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const RecyclingRate rates[] = {RecyclingRate::standard(), RecyclingRate::tanh_shifted(3, 1, 1),
                                   RecyclingRate::tanh_shifted(3, 8, 0.5),
                                   RecyclingRate::tanh_shifted(1.5, 0.3, 2.0), RecyclingRate::step(3)};
    for (const auto& rate : rates) {
        for (int trial = 0; trial < 200; ++trial) {
            double x1 = 20.0 * unit(gen), x2 = 20.0 * unit(gen);
            if (x1 > x2) std::swap(x1, x2);
            EXPECT_GE(rate(x2), rate(x1)) << rate.name();
            EXPECT_GE(rate(x1), 0.0);
            EXPECT_LE(rate(x2), rate.limit() + 1e-15);
        }
    }
}

TEST(DerivedConstants, ClosedFormValues) {
    const auto k = derived_constants(validate_params(fig2_params()));
    EXPECT_NEAR(k.A, 0.378787878787878788, 1e-15);
    EXPECT_NEAR(k.v0_upper, -29.5220826937328223, 1e-12);
    EXPECT_NEAR(k.K, 658.127555835168292, 1e-10);
    EXPECT_NEAR(k.shift, 1.0 / 0.68, 1e-15);

    LakeParams unit{0.45, 1.0, 0.1, 0.0, RecyclingRate::standard()};
    EXPECT_DOUBLE_EQ(derived_constants(validate_params(unit)).A, 1.0);
}

TEST(DerivedConstants, APositiveAndExactOnRandomAdmissibleParams) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        LakeParams p{0.1 + unit(gen), 0.01 + 2 * unit(gen), 0.005 + 0.5 * unit(gen), 0.0,
                     RecyclingRate::standard()};
        p.sigma = 0.99 * std::sqrt(p.rho + 2 * p.b) * unit(gen);
        const auto k = derived_constants(validate_params(p));
        EXPECT_GT(k.A, 0.0);
        EXPECT_EQ(k.A, p.c / (p.rho + 2 * p.b - p.sigma * p.sigma));
    }
}

TEST(Asymptote, SlopeIsDerivativeOfValue) {
    const auto p = validate_params(fig2_params());
    const auto k = derived_constants(p);
    for (double x : {0.0, 1.0, 7.5, 40.0}) {
        const double h = 1e-5;
        const double fd = (asymptotic_value(p, k, x + h) - asymptotic_value(p, k, x - h)) / (2 * h);
        EXPECT_NEAR(asymptotic_slope(p, k, x), fd, 1e-6 * std::abs(fd));
        EXPECT_LT(asymptotic_slope(p, k, x), 0.0);
    }
}

}  // namespace
}  // namespace lake
