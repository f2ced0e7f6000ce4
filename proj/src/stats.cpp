#include "lake/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace lake {

MeanStderr mean_stderr(std::span<const double> values) {
    MeanStderr out;
    const auto n = static_cast<double>(values.size());
    if (values.empty()) return out;
    for (double v : values) out.mean += v;
    out.mean /= n;
    if (values.size() < 2) return out;
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stderr_ = std::sqrt(ss / (n - 1) / n);
    return out;
}

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double F = cdf(sorted[i]);
        d = std::max({d, (i + 1) / n - F, F - i / n});
    }
    return d;
}

double ks_exponential(std::span<const double> samples) {
    return ks_distance(samples, [](double t) { return t <= 0.0 ? 0.0 : -std::expm1(-t); });
}

}  // namespace lake
