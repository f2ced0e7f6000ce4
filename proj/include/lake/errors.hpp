#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lake {

/// Every failure raised by the library derives from this type. The CLI maps
/// ConfigError to exit code 2 and NumericalError to exit code 3.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    /// Stable machine-readable tag (used in error JSON).
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// Parameter and configuration problems detected before any computation.
class ConfigError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class FinitenessViolation : public ConfigError {
public:
    explicit FinitenessViolation(const std::string& message)
        : ConfigError("FinitenessViolation", message) {}
};

class NonpositiveParameter : public ConfigError {
public:
    explicit NonpositiveParameter(const std::string& message)
        : ConfigError("NonpositiveParameter", message) {}
};

class RecyclingAssumptionViolation : public ConfigError {
public:
    RecyclingAssumptionViolation(std::string check, const std::string& message)
        : ConfigError("RecyclingAssumptionViolation", message), check_(std::move(check)) {}

    /// Which sub-check failed: "r(0)=0", "small-x bound", "monotone", "well-formed".
    const std::string& check() const noexcept { return check_; }

private:
    std::string check_;
};

class PreconditionError : public ConfigError {
public:
    explicit PreconditionError(const std::string& message)
        : ConfigError("PreconditionError", message) {}
};

/// A config file or command-line value that cannot be used. line is 0 for
/// values given on the command line.
class ConfigParseError : public ConfigError {
public:
    ConfigParseError(const std::string& message, std::string key, int line)
        : ConfigError("ConfigParseError", message), key_(std::move(key)), line_(line) {}

    const std::string& key() const noexcept { return key_; }
    int line() const noexcept { return line_; }

private:
    std::string key_;
    int line_;
};

/// Grid violates dx (r(x) - b x) <= sigma^2 / 2.
class MonotonicityViolation : public ConfigError {
public:
    MonotonicityViolation(const std::string& message, int worst_node, double worst_x,
                          long minimal_n)
        : ConfigError("MonotonicityViolation", message),
          worst_node_(worst_node), worst_x_(worst_x), minimal_n_(minimal_n) {}

    int worst_node() const noexcept { return worst_node_; }
    double worst_x() const noexcept { return worst_x_; }
    /// Smallest n satisfying the condition on the same l; -1 when none exists (sigma = 0).
    long minimal_n() const noexcept { return minimal_n_; }

private:
    int worst_node_;
    double worst_x_;
    long minimal_n_;
};

class NonnegativeForwardDifference : public NumericalError {
public:
    NonnegativeForwardDifference(const std::string& message, int index)
        : NumericalError("NonnegativeForwardDifference", message), index_(index) {}

    int index() const noexcept { return index_; }

private:
    int index_;
};

class ZeroPivot : public NumericalError {
public:
    ZeroPivot(const std::string& message, int row)
        : NumericalError("ZeroPivot", message), row_(row) {}

    int row() const noexcept { return row_; }

private:
    int row_;
};

class MaxIterationsExceeded : public NumericalError {
public:
    MaxIterationsExceeded(const std::string& message, std::vector<double> best_iterate,
                          double residual_norm)
        : NumericalError("MaxIterationsExceeded", message),
          best_iterate_(std::move(best_iterate)), residual_norm_(residual_norm) {}

    const std::vector<double>& best_iterate() const noexcept { return best_iterate_; }
    double residual_norm() const noexcept { return residual_norm_; }

private:
    std::vector<double> best_iterate_;
    double residual_norm_;
};

class InfeasibleIterate : public NumericalError {
public:
    explicit InfeasibleIterate(const std::string& message)
        : NumericalError("InfeasibleIterate", message) {}
};

class NormalizationFailure : public NumericalError {
public:
    explicit NormalizationFailure(const std::string& message)
        : NumericalError("NormalizationFailure", message) {}
};

class DriftEvaluationOutOfRange : public NumericalError {
public:
    DriftEvaluationOutOfRange(const std::string& message, double x)
        : NumericalError("DriftEvaluationOutOfRange", message), x_(x) {}

    double x() const noexcept { return x_; }

private:
    double x_;
};

class NoSecondAttractor : public NumericalError {
public:
    explicit NoSecondAttractor(const std::string& message)
        : NumericalError("NoSecondAttractor", message) {}
};

}  // namespace lake
