#include "lake/model.hpp"

#include <cmath>
#include <fmt/format.h>

#include "lake/errors.hpp"

namespace lake {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

RecyclingRate::RecyclingRate(Kind kind) : kind_(kind) {
    std::visit(overloaded{
                   [&](const StandardRate&) {
                       a_ = 1.0;
                       C_ = 0.0;  // x (1 - x^2/(1+x^2)) = x/(1+x^2) -> 0
                   },
                   [&](const TanhShiftedRate& t) {
                       a_ = t.scale * (1.0 + std::tanh(t.slope * t.center));
                       C_ = 0.0;  // a - r decays like exp(-2 slope x)
                   },
                   [&](const StepRate&) {
                       a_ = 1.0;
                       C_ = 0.0;  // exact for x > threshold
                   },
               },
               kind_);
}

double RecyclingRate::operator()(double x) const {
    return std::visit(
        overloaded{
            [x](const StandardRate&) {
                const double x2 = x * x;
                return x2 / (x2 + 1.0);
            },
            [x](const TanhShiftedRate& t) {
                return t.scale * (std::tanh(t.slope * (x - t.center)) + std::tanh(t.slope * t.center));
            },
            [x](const StepRate& s) { return x > s.threshold ? 1.0 : 0.0; },
        },
        kind_);
}

std::string RecyclingRate::name() const {
    return std::visit(overloaded{
                          [](const StandardRate&) { return std::string("standard"); },
                          [](const TanhShiftedRate&) { return std::string("tanh"); },
                          [](const StepRate&) { return std::string("step"); },
                      },
                      kind_);
}

double RecyclingRate::transition_scale() const {
    return std::visit(overloaded{
                          [](const StandardRate&) { return 10.0; },
                          [](const TanhShiftedRate& t) {
                              return std::abs(t.center) + 10.0 / std::max(std::abs(t.slope), 1e-3);
                          },
                          [](const StepRate& s) { return std::abs(s.threshold) + 10.0; },
                      },
                      kind_);
}

RateLimits recycling_limits(const RecyclingRate& rate) {
    return {rate.limit(), rate.tail_constant()};
}

ValidatedParams validate_params(const LakeParams& p) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw NonpositiveParameter(fmt::format("{} must be strictly positive, got {}", name, v));
        }
    };
    positive(p.b, "b");
    positive(p.c, "c");
    positive(p.rho, "rho");
    if (!(p.sigma >= 0.0) || !std::isfinite(p.sigma)) {
        throw NonpositiveParameter(fmt::format("sigma must be nonnegative, got {}", p.sigma));
    }
    if (p.sigma * p.sigma >= p.rho + 2.0 * p.b) {
        throw FinitenessViolation(fmt::format(
            "value function is -infinity: sigma^2 = {} must be < rho + 2b = {}", p.sigma * p.sigma,
            p.rho + 2.0 * p.b));
    }

    std::vector<std::string> warnings;
    const auto& rate = p.rate;
    if (const auto* t = std::get_if<TanhShiftedRate>(&rate.kind())) {
        if (!(t->slope > 0.0) || !(t->scale > 0.0) || !std::isfinite(t->center)) {
            throw RecyclingAssumptionViolation(
                "well-formed", fmt::format("tanh rate needs slope > 0 and scale > 0 (slope={}, scale={})",
                                           t->slope, t->scale));
        }
    }
    if (const auto* s = std::get_if<StepRate>(&rate.kind())) {
        if (!(s->threshold >= 0.0) || !std::isfinite(s->threshold)) {
            throw RecyclingAssumptionViolation(
                "r(0)=0", fmt::format("step threshold must be >= 0, got {}", s->threshold));
        }
        warnings.push_back(
            fmt::format("step recycling rate (threshold {}) is not locally Lipschitz", s->threshold));
    }

    if (std::abs(rate(0.0)) > 1e-14) {
        throw RecyclingAssumptionViolation("r(0)=0",
                                           fmt::format("r(0) = {} but must vanish", rate(0.0)));
    }

    // r(x) < (b + rho) x close to 0, sampled on 0.1 * 2^-k, k = 0..20.
    for (int k = 0; k <= 20; ++k) {
        const double x = std::ldexp(0.1, -k);
        if (!(rate(x) < (p.b + p.rho) * x)) {
            throw RecyclingAssumptionViolation(
                "small-x bound",
                fmt::format("r({}) = {} is not below (b + rho) x = {}", x, rate(x), (p.b + p.rho) * x));
        }
    }

    const double upper = 2.0 * rate.transition_scale();
    constexpr int samples = 4000;
    double prev = rate(0.0);
    for (int i = 1; i <= samples; ++i) {
        const double x = upper * i / samples;
        const double cur = rate(x);
        if (cur < prev) {
            throw RecyclingAssumptionViolation(
                "monotone", fmt::format("r decreases near x = {} ({} < {})", x, cur, prev));
        }
        prev = cur;
    }

    return ValidatedParams(p, std::move(warnings));
}

DerivedConstants derived_constants(const ValidatedParams& p) {
    const double b = p.b(), c = p.c(), rho = p.rho(), s2 = p.sigma() * p.sigma();
    const auto [a, C] = recycling_limits(p.rate());
    const double A = c / (rho + 2.0 * b - s2);
    const double K = (1.0 / rho) * ((2.0 * b + s2) / (2.0 * rho) -
                                    A * a * a * (rho + 2.0 * b) / ((b + rho) * (b + rho)) - 1.0 +
                                    2.0 * A * C);
    const double v0_upper = (1.0 / rho) * std::log((b + rho) / std::sqrt(2.0 * std::exp(1.0) * c));
    return {A, K, v0_upper, a / (b + rho)};
}

double asymptotic_value(const ValidatedParams& p, const DerivedConstants& k, double x) {
    const double y = x + k.shift;
    return -k.A * y * y - std::log(2.0 * k.A * y) / p.rho() + k.K;
}

double asymptotic_slope(const ValidatedParams& p, const DerivedConstants& k, double x) {
    const double y = x + k.shift;
    return -2.0 * k.A * y - 1.0 / (p.rho() * y);
}

}  // namespace lake
