#pragma once

#include <functional>
#include <span>

namespace lake {

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

/// Sample mean and standard error, summed in index order.
MeanStderr mean_stderr(std::span<const double> values);

/// Kolmogorov-Smirnov distance between the empirical law of samples and a CDF.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);

/// KS distance to Exp(1).
double ks_exponential(std::span<const double> samples);

}  // namespace lake
