#pragma once

// Closed-form least-squares direction estimators for single-index models
// E[Y | X] = g(X'beta):
//
//   centered:    D  = S^-1 sum_i Y_i (X_i - Xbar) / ||.||
//   uncentered:  D* = S^-1 sum_i Y_i X_i          / ||.||
//
// where S is the 1/n sample covariance of X.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "dirset/error.hpp"
#include "dirset/numkit.hpp"

namespace dirset {

struct Dataset {
    Matrix x; // n x p covariates
    Vector y; // length n response

    std::size_t n() const noexcept { return x.rows(); }
    std::size_t p() const noexcept { return x.cols(); }

    void validate() const {
        if (y.size() != x.rows())
            throw InvalidArgument("response length " + std::to_string(y.size()) + " does not match " +
                                  std::to_string(x.rows()) + " covariate rows");
        if (x.cols() == 0) throw InvalidArgument("dataset has no covariates");
        if (x.rows() < 2) throw InsufficientData("dataset needs at least 2 rows");
        for (double v : x.data())
            if (!std::isfinite(v)) throw InvalidArgument("non-finite covariate value");
        for (double v : y)
            if (!std::isfinite(v)) throw InvalidArgument("non-finite response value");
    }
};

enum class Method { NewCentered, NewUncentered, MaxScore, Lmrc, Probit };

inline std::string_view method_tag(Method m) {
    switch (m) {
    case Method::NewCentered: return "new";
    case Method::NewUncentered: return "new-uncentered";
    case Method::MaxScore: return "ms";
    case Method::Lmrc: return "lmrc";
    case Method::Probit: return "probit";
    }
    return "?";
}

inline std::optional<Method> parse_method(std::string_view tag) {
    for (Method m : {Method::NewCentered, Method::NewUncentered, Method::MaxScore, Method::Lmrc, Method::Probit})
        if (method_tag(m) == tag) return m;
    return std::nullopt;
}

inline bool is_least_squares(Method m) { return m == Method::NewCentered || m == Method::NewUncentered; }

struct DirectionEstimate {
    Vector direction; // unit norm
    Method method = Method::NewCentered;
    double lambda_hat = std::numeric_limits<double>::quiet_NaN();
    double gamma_hat = std::numeric_limits<double>::quiet_NaN();
    double raw_norm = 0.0; // norm before normalization

    // baseline-specific diagnostics
    std::optional<long> score;    // maximum score: correctly classified count
    std::optional<int> iterations; // probit: Newton iterations
};

inline Vector normalized(std::span<const double> v) {
    const double len = norm2(v);
    if (!(len > 0.0) || !std::isfinite(len)) throw DegenerateDirection("cannot normalize a zero or non-finite vector");
    Vector out(v.begin(), v.end());
    for (double& c : out) c /= len;
    return out;
}

/// cos of the angle between two nonzero vectors, clamped to [-1, 1].
inline double cosine_to(std::span<const double> direction, std::span<const double> truth) {
    if (direction.size() != truth.size()) throw InvalidArgument("cosine_to: dimension mismatch");
    const double a = norm2(direction), b = norm2(truth);
    if (!(a > 0.0) || !(b > 0.0)) throw DegenerateDirection("cosine_to: zero vector");
    const double c = dot(direction, truth) / (a * b);
    return std::clamp(c, -1.0, 1.0);
}

namespace detail {

inline Vector solve_covariance(const SymMatrix& cov, std::span<const double> rhs) {
    try {
        return pd_solve(cov, rhs);
    } catch (const SingularMatrix&) {
        throw SingularCovariance("sample covariance of X is not positive definite");
    }
}

inline DirectionEstimate least_squares_direction(const Dataset& data, bool centered) {
    data.validate();
    const std::size_t n = data.n(), p = data.p();
    const SymMatrix cov = sample_covariance(data.x);
    const Vector xbar = column_means(data.x);

    double ybar = 0.0;
    for (double v : data.y) ybar += v;
    ybar /= static_cast<double>(n);

    // For the centered form, sum_i Y_i (X_i - Xbar) == sum_i (Y_i - Ybar)(X_i - Xbar);
    // the latter cancels exactly for constant Y.
    Vector moment(p, 0.0);
    double magnitude = 0.0;
    Vector row(p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) row[j] = centered ? data.x(i, j) - xbar[j] : data.x(i, j);
        const double w = centered ? data.y[i] - ybar : data.y[i];
        for (std::size_t j = 0; j < p; ++j) moment[j] += w * row[j];
        magnitude += std::abs(data.y[i]) * norm2(row);
    }
    if (norm2(moment) <= 1e-12 * magnitude)
        throw DegenerateDirection("the response carries no linear signal in X (zero moment vector)");

    const Vector raw = solve_covariance(cov, moment);
    const double raw_norm = norm2(raw);
    if (!(raw_norm > 0.0)) throw DegenerateDirection("zero unnormalized direction");

    DirectionEstimate est;
    est.method = centered ? Method::NewCentered : Method::NewUncentered;
    est.direction = normalized(raw);
    est.raw_norm = raw_norm;
    // lambda_hat = (1/n) sum_i Y_i d' S^-1 Xtilde_i = d' raw / n
    est.lambda_hat = dot(est.direction, raw) / static_cast<double>(n);
    est.gamma_hat = ybar;
    return est;
}

} // namespace detail

inline DirectionEstimate estimate_centered(const Dataset& data) {
    return detail::least_squares_direction(data, true);
}

/// Intended for mean-zero designs.
inline DirectionEstimate estimate_uncentered(const Dataset& data) {
    return detail::least_squares_direction(data, false);
}

} // namespace dirset
