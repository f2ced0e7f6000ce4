#pragma once

#include <string>
#include <variant>
#include <vector>

namespace lake {

/// r(x) = x^2 / (x^2 + 1)
struct StandardRate {};

/// r(x) = scale * (tanh(slope * (x - center)) + tanh(slope * center))
struct TanhShiftedRate {
    double center = 3.0;
    double slope = 1.0;
    double scale = 1.0;
};

/// r(x) = 1{x > threshold}
struct StepRate {
    double threshold = 3.0;
};

/// Sigmoid recycling rate with its limits a = lim r(x) and C = lim x (a - r(x)).
///
/// Both limits are closed forms per kind; C enters the constant K of the
/// large-x asymptote and is never estimated numerically.
class RecyclingRate {
public:
    using Kind = std::variant<StandardRate, TanhShiftedRate, StepRate>;

    RecyclingRate() : RecyclingRate(StandardRate{}) {}
    explicit RecyclingRate(Kind kind);

    static RecyclingRate standard() { return RecyclingRate(StandardRate{}); }
    static RecyclingRate tanh_shifted(double center, double slope, double scale) {
        return RecyclingRate(TanhShiftedRate{center, slope, scale});
    }
    static RecyclingRate step(double threshold) { return RecyclingRate(StepRate{threshold}); }

    double operator()(double x) const;

    double limit() const noexcept { return a_; }
    double tail_constant() const noexcept { return C_; }

    const Kind& kind() const noexcept { return kind_; }
    /// "standard", "tanh" or "step".
    std::string name() const;
    bool is_lipschitz() const noexcept { return !std::holds_alternative<StepRate>(kind_); }

    /// Upper end of the range where r still varies appreciably; used to size
    /// sampling meshes for the admissibility checks.
    double transition_scale() const;

private:
    Kind kind_;
    double a_ = 1.0;
    double C_ = 0.0;
};

/// Closed-form (a, C) for a rate.
struct RateLimits {
    double a;
    double C;
};
RateLimits recycling_limits(const RecyclingRate& rate);

/// Economic and ecological parameters of the lake.
struct LakeParams {
    double b = 0.65;      ///< loss rate
    double c = 0.5;       ///< pollution cost weight
    double rho = 0.03;    ///< discount rate
    double sigma = 0.1;   ///< noise intensity
    RecyclingRate rate{};
};

/// LakeParams that passed validate_params. Only validate_params constructs it.
class ValidatedParams {
public:
    const LakeParams& params() const noexcept { return p_; }
    double b() const noexcept { return p_.b; }
    double c() const noexcept { return p_.c; }
    double rho() const noexcept { return p_.rho; }
    double sigma() const noexcept { return p_.sigma; }
    const RecyclingRate& rate() const noexcept { return p_.rate; }
    double r(double x) const { return p_.rate(x); }

    /// Non-fatal findings, e.g. a non-Lipschitz step rate.
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

private:
    friend ValidatedParams validate_params(const LakeParams& p);
    ValidatedParams(LakeParams p, std::vector<std::string> warnings)
        : p_(std::move(p)), warnings_(std::move(warnings)) {}

    LakeParams p_;
    std::vector<std::string> warnings_;
};

/// Checks positivity of b, c, rho, the finiteness condition sigma^2 < rho + 2b
/// and the recycling-rate assumptions (r(0) = 0, r(x) < (b + rho) x near 0,
/// monotonicity on a sample mesh). Throws a ConfigError subclass on failure.
ValidatedParams validate_params(const LakeParams& p);

struct DerivedConstants {
    double A;         ///< quadratic coefficient c / (rho + 2b - sigma^2)
    double K;         ///< constant of the large-x asymptote
    double v0_upper;  ///< upper bound on V(0)
    double shift;     ///< a / (b + rho)
};

DerivedConstants derived_constants(const ValidatedParams& p);

/// Large-x asymptote -A(x+s)^2 - (1/rho) ln(2A(x+s)) + K and its derivative.
double asymptotic_value(const ValidatedParams& p, const DerivedConstants& k, double x);
double asymptotic_slope(const ValidatedParams& p, const DerivedConstants& k, double x);

}  // namespace lake
