#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lake/errors.hpp"

namespace lake {

/// Thomas elimination without pivoting. lower[0] and upper[n-1] are ignored.
/// Throws ZeroPivot when a pivot vanishes or is not finite.
template <class Real>
std::vector<Real> solve_tridiagonal(std::span<const Real> lower, std::span<const Real> diag,
                                    std::span<const Real> upper, std::span<const Real> rhs) {
    const std::size_t n = diag.size();
    std::vector<Real> c(n), d(n);
    Real pivot = diag[0];
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) pivot = diag[i] - lower[i] * c[i - 1];
        if (pivot == Real(0) || !std::isfinite(static_cast<double>(pivot))) {
            throw ZeroPivot("zero pivot in tridiagonal elimination at row " + std::to_string(i),
                            static_cast<int>(i));
        }
        c[i] = (i + 1 < n) ? upper[i] / pivot : Real(0);
        d[i] = (rhs[i] - (i > 0 ? lower[i] * d[i - 1] : Real(0))) / pivot;
    }
    for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
    return d;
}

}  // namespace lake
