#pragma once

// Plug-in asymptotic covariance of sqrt(n)(D - beta/||beta||) and the Wald
// test of H0: direction = beta0.
//
// The covariance is the 1/n sample covariance of per-sample influence vectors
//
//   psi_i = P S^-1 (Y_i Xt_i / lambda - Xt_i Xt_i' d - gamma Xt_i / lambda)
//
// with d the estimated unit direction, P = I - d d' the tangent-plane
// projector, Xt_i = X_i - Xbar. The uncentered variant uses X_i and drops the
// gamma term.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dirset/error.hpp"
#include "dirset/estimator.hpp"
#include "dirset/numkit.hpp"

namespace dirset {

// Relative eigenvalue cutoff for the rank / pseudoinverse of sigma_beta.
// The null direction d is annihilated by construction, so its eigenvalue
// sits at rounding level; anything above 1e-9 of the largest is signal.
inline constexpr double kCovarianceRankTolerance = 1e-9;
inline constexpr double kLambdaFloor = 1e-8;

struct AsymptoticCovariance {
    SymMatrix sigma_beta; // covariance of the limit of sqrt(n)(D - beta/||beta||)
    std::size_t rank = 0;
    double lambda_hat = 0.0;
    double gamma_hat = 0.0;
    std::size_t sample_size = 0;
    bool centered = true;

    /// sqrt(diag(sigma_beta) / n)
    Vector standard_errors() const {
        Vector se(sigma_beta.dim());
        for (std::size_t i = 0; i < se.size(); ++i)
            se[i] = std::sqrt(std::max(0.0, sigma_beta(i, i)) / static_cast<double>(sample_size));
        return se;
    }
};

// ---- chi-square distribution ---------------------------------------------

namespace detail {

// Regularized upper incomplete gamma Q(a, x).
inline double gamma_q(double a, double x) {
    if (!(a > 0.0)) throw InvalidArgument("gamma_q: shape must be positive");
    if (x <= 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    const double log_prefix = a * std::log(x) - x - std::lgamma(a);
    constexpr double eps = 1e-17;
    if (x < a + 1.0) {
        // P(a, x) by series
        double term = 1.0 / a, sum = term;
        for (int k = 1; k < 10000; ++k) {
            term *= x / (a + k);
            sum += term;
            if (term < sum * eps) break;
        }
        return std::max(0.0, 1.0 - sum * std::exp(log_prefix));
    }
    // Q(a, x) by continued fraction (modified Lentz)
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps) break;
    }
    return std::exp(log_prefix) * h;
}

} // namespace detail

/// P(chi2(dof) > x)
inline double chi_square_upper_tail(double x, int dof) {
    if (dof < 1) throw InvalidArgument("chi-square dof must be positive");
    if (std::isnan(x)) throw InvalidArgument("chi-square argument is NaN");
    if (x <= 0.0) return 1.0;
    return detail::gamma_q(0.5 * dof, 0.5 * x);
}

/// x with P(chi2(dof) > x) = upper_prob, by bisection.
inline double chi_square_upper_quantile(double upper_prob, int dof) {
    if (!(upper_prob > 0.0 && upper_prob < 1.0)) throw InvalidArgument("tail probability must lie in (0, 1)");
    double lo = 0.0, hi = std::max(1.0, static_cast<double>(dof));
    while (chi_square_upper_tail(hi, dof) > upper_prob) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (chi_square_upper_tail(mid, dof) > upper_prob) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// ---- covariance ------------------------------------------------------------

/// Per-sample influence vectors psi_i (rows), before mean removal.
inline Matrix influence_vectors(const Dataset& data, const DirectionEstimate& est, bool centered) {
    data.validate();
    const std::size_t n = data.n(), p = data.p();
    if (est.direction.size() != p) throw InvalidArgument("estimate dimension does not match dataset");
    const double lambda = est.lambda_hat;
    if (!(std::abs(lambda) > kLambdaFloor))
        throw UnstableLambda("|lambda_hat| = " + std::to_string(std::abs(lambda)) + " is below 1e-8");
    const double gamma = est.gamma_hat;

    const SymMatrix cov = sample_covariance(data.x);
    Matrix chol;
    try {
        chol = cholesky_factor(cov);
    } catch (const SingularMatrix&) {
        throw SingularCovariance("sample covariance of X is not positive definite");
    }
    const Vector xbar = column_means(data.x);
    const Vector& d = est.direction;

    Matrix psi(n, p);
    Vector xt(p), w(p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) xt[j] = centered ? data.x(i, j) - xbar[j] : data.x(i, j);
        const double index = dot(xt, d);
        const double yw = (centered ? data.y[i] - gamma : data.y[i]) / lambda;
        for (std::size_t j = 0; j < p; ++j) w[j] = yw * xt[j] - xt[j] * index;
        Vector s = cholesky_solve(chol, w);
        const double along = dot(s, d);
        for (std::size_t j = 0; j < p; ++j) psi(i, j) = s[j] - along * d[j];
    }
    return psi;
}

namespace detail {

inline AsymptoticCovariance covariance_from_influence(const Matrix& psi, const DirectionEstimate& est,
                                                      bool centered) {
    AsymptoticCovariance out{sample_covariance(psi), 0, est.lambda_hat, est.gamma_hat, psi.rows(), centered};
    out.rank = moore_penrose(out.sigma_beta, kCovarianceRankTolerance).rank;
    return out;
}

} // namespace detail

inline AsymptoticCovariance covariance_centered(const Dataset& data, const DirectionEstimate& est) {
    return detail::covariance_from_influence(influence_vectors(data, est, true), est, true);
}

/// Mean-zero designs only.
inline AsymptoticCovariance covariance_uncentered(const Dataset& data, const DirectionEstimate& est) {
    return detail::covariance_from_influence(influence_vectors(data, est, false), est, false);
}

// ---- Wald test ---------------------------------------------------------------

struct WaldResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
    std::map<double, bool> reject_at; // level -> reject H0
    std::vector<std::string> warnings;
};

inline WaldResult wald_test(const DirectionEstimate& est, const AsymptoticCovariance& cov,
                            std::span<const double> beta0, std::span<const double> levels = {}) {
    const std::size_t p = est.direction.size();
    if (beta0.size() != p)
        throw InvalidNull("null direction has length " + std::to_string(beta0.size()) + ", expected " +
                          std::to_string(p));
    if (std::abs(norm2(beta0) - 1.0) > 1e-8) throw InvalidNull("null direction must have unit norm");
    if (cov.sigma_beta.dim() != p) throw InvalidArgument("covariance dimension does not match estimate");
    if (p < 2) throw InvalidArgument("the Wald test needs p >= 2");

    const auto pinv = moore_penrose(cov.sigma_beta, kCovarianceRankTolerance);
    Vector dev(p);
    for (std::size_t i = 0; i < p; ++i) dev[i] = est.direction[i] - beta0[i];

    WaldResult r;
    r.dof = static_cast<int>(p) - 1;
    r.statistic = std::max(0.0, static_cast<double>(cov.sample_size) * dot(dev, pinv.inverse * dev));
    r.p_value = chi_square_upper_tail(r.statistic, r.dof);
    for (double alpha : levels) {
        if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("significance level must lie in (0, 1)");
        r.reject_at[alpha] = r.statistic > chi_square_upper_quantile(alpha, r.dof);
    }
    if (pinv.rank != p - 1)
        r.warnings.push_back("covariance rank " + std::to_string(pinv.rank) + " differs from p - 1 = " +
                             std::to_string(p - 1));
    if (dot(est.direction, beta0) < 0.0)
        r.warnings.push_back("null direction lies in the opposite hemisphere; the deviation along the "
                             "estimate is in the covariance null space and does not contribute");
    return r;
}

} // namespace dirset
