#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "mvpi/errors.hpp"
#include "mvpi/ftheta.hpp"

namespace mvpi::detail {

inline double rounding_level(const std::vector<ExtReal>& v) {
    double m = 0.0;
    for (auto x : v)
        if (x.is_finite()) m = std::max(m, std::fabs(x.value()));
    return 8.0 * std::numeric_limits<double>::epsilon() * std::max(m, 1.0);
}

inline double distance(const std::vector<ExtReal>& a, const std::vector<ExtReal>& b, const std::vector<bool>& skip) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!skip.empty() && skip[i]) continue;
        d = std::max(d, abs_diff(a[i], b[i]));
    }
    return d;
}

/**
 * Iterates v <- step(v) from v0. With alpha < 1 the stopping rule is the
 * contraction bound alpha r / (1 - alpha) < tol; otherwise r < tol on the
 * entries not in skip. Either way an exact repeat or a residual at rounding
 * level ends the loop.
 */
template <class Step>
std::vector<ExtReal> iterate_to_limit(std::vector<ExtReal> v, Step&& step, const std::vector<bool>& skip,
                                      double alpha, BoundDirection direction, const FixedPointOptions& options,
                                      FixedPointCertificate& cert, const char* what) {
    cert = {};
    cert.direction = alpha < 1.0 ? BoundDirection::none : direction;
    double r = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= options.max_iterations; ++k) {
        std::vector<ExtReal> next = step(v);
        r = distance(next, v, skip);
        const bool same = next == v;
        v = std::move(next);
        cert.iterations = k;
        cert.residual = r;
        if (same) {
            cert.stabilized = true;
            if (alpha < 1.0) cert.error_bound = 0.0;
            return v;
        }
        if (alpha < 1.0) {
            const double bound = alpha * r / (1.0 - alpha);
            if (bound < options.tolerance || r <= rounding_level(v)) {
                cert.error_bound = bound;
                return v;
            }
        } else if (r < options.tolerance || r <= rounding_level(v)) {
            return v;
        }
    }
    throw ConvergenceError(std::string(what) + " reached the iteration cap", v, cert.direction, r);
}

} // namespace mvpi::detail
