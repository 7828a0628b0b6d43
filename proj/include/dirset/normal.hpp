#pragma once

#include <cmath>
#include <numbers>

namespace dirset {

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

namespace detail {

// Mills ratio (1 - Phi(t)) / phi(t) for t > 0 via Laplace's continued fraction;
// only used for t >= 5 where it converges quickly.
inline double mills_ratio_tail(double t) {
    double f = t;
    for (int k = 120; k >= 1; --k) f = t + k / f;
    return 1.0 / f;
}

} // namespace detail

/// phi(z) / Phi(z), stable for very negative z.
inline double normal_hazard_lower(double z) {
    if (z >= -5.0) return normal_pdf(z) / normal_cdf(z);
    return 1.0 / detail::mills_ratio_tail(-z);
}

/// log Phi(z), stable in both tails.
inline double log_normal_cdf(double z) {
    if (z >= 5.0) return std::log1p(-0.5 * std::erfc(z / std::numbers::sqrt2));
    if (z >= -5.0) return std::log(normal_cdf(z));
    return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(detail::mills_ratio_tail(-z));
}

} // namespace dirset
