#pragma once

// Comparison estimators: maximum score, linearized maximum rank correlation
// and probit maximum likelihood. All return unit-norm directions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dirset/error.hpp"
#include "dirset/estimator.hpp"
#include "dirset/normal.hpp"
#include "dirset/numkit.hpp"

namespace dirset {

inline void require_binary_response(const Dataset& data) {
    for (std::size_t i = 0; i < data.y.size(); ++i)
        if (data.y[i] != 0.0 && data.y[i] != 1.0)
            throw InvalidResponse("response must be 0/1, row " + std::to_string(i) + " has " +
                                  std::to_string(data.y[i]));
}

inline double response_mean(const Vector& y) {
    return y.empty() ? 0.0 : std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
}

// ---- maximum score -----------------------------------------------------------

struct MaxScoreConfig {
    int n_random_starts = 200;
    int refine_rounds = 10;
    std::uint64_t seed = 0;
};

inline constexpr std::size_t kMaxScoreMaxDimension = 6;

/// Number of correctly classified samples: Y = 1 with X'b >= 0, or Y = 0 with X'b < 0.
inline long classification_score(const Dataset& data, std::span<const double> b) {
    long score = 0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        const bool positive = dot(data.x.row(i), b) >= 0.0;
        score += (data.y[i] == 1.0) == positive ? 1 : 0;
    }
    return score;
}

namespace detail {

struct ArcEvent {
    double angle;
    int delta; // change in score when crossing this angle in increasing direction
};

inline double wrap_angle(double t) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    t = std::fmod(t, two_pi);
    return t < 0.0 ? t + two_pi : t;
}

/// Exact maximization of the score over the open arcs of the great circle
/// b(t) = cos(t) b + sin(t) u (b, u orthonormal). Returns the angle of the
/// first arc (in increasing t from 0) whose score exceeds `current`, choosing
/// the best such arc; nullopt if no arc improves.
inline std::optional<double> best_arc(const Dataset& data, std::span<const double> b, std::span<const double> u,
                                      long current) {
    std::vector<ArcEvent> events;
    events.reserve(2 * data.n());
    std::vector<double> phase(data.n());
    std::vector<bool> on_circle(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
        const double a = dot(data.x.row(i), b), c = dot(data.x.row(i), u);
        on_circle[i] = a != 0.0 || c != 0.0;
        if (!on_circle[i]) continue;
        // X'b(t) = R cos(t - phi) >= 0 on the closed arc [phi - pi/2, phi + pi/2]
        const double phi = std::atan2(c, a);
        phase[i] = phi;
        const int w = data.y[i] == 1.0 ? 1 : -1;
        events.push_back({wrap_angle(phi - 0.5 * std::numbers::pi), w});
        events.push_back({wrap_angle(phi + 0.5 * std::numbers::pi), -w});
    }
    if (events.empty()) return std::nullopt;
    std::sort(events.begin(), events.end(), [](const ArcEvent& l, const ArcEvent& r) { return l.angle < r.angle; });

    // Score on the wrap-around arc (last event, first event + 2 pi).
    const double wrap_mid = wrap_angle(0.5 * (events.back().angle + events.front().angle + 2.0 * std::numbers::pi));
    long value = 0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        bool positive = true;
        if (on_circle[i]) positive = std::cos(wrap_mid - phase[i]) >= 0.0;
        value += (data.y[i] == 1.0) == positive ? 1 : 0;
    }
    const long wrap_value = value;

    long best = current;
    std::optional<double> best_angle;
    std::size_t k = 0;
    while (k < events.size()) {
        const double t = events[k].angle;
        while (k < events.size() && events[k].angle == t) value += events[k++].delta;
        if (k == events.size()) break;
        const double next = events[k].angle;
        if (value > best && next > t) {
            best = value;
            best_angle = 0.5 * (t + next);
        }
    }
    if (wrap_value > best) best_angle = wrap_mid;
    return best_angle;
}

inline Vector rotate(std::span<const double> b, std::span<const double> u, double t) {
    Vector out(b.size());
    const double c = std::cos(t), s = std::sin(t);
    for (std::size_t j = 0; j < b.size(); ++j) out[j] = c * b[j] + s * u[j];
    return normalized(out);
}

} // namespace detail

/// Maximum score direction by random unit starts, each refined by exact
/// line searches along the great circles through the coordinate axes.
/// Ties keep the first direction reached in search order.
inline DirectionEstimate maximum_score(const Dataset& data, const MaxScoreConfig& cfg = {}) {
    data.validate();
    require_binary_response(data);
    const std::size_t p = data.p();
    if (p < 2) throw InvalidArgument("maximum score needs p >= 2");
    if (p > kMaxScoreMaxDimension)
        throw DimensionTooLarge("maximum score search is limited to p <= " + std::to_string(kMaxScoreMaxDimension) +
                                ", got p = " + std::to_string(p));
    if (cfg.n_random_starts < 1) throw InvalidArgument("n_random_starts must be >= 1");
    if (cfg.refine_rounds < 1) throw InvalidArgument("refine_rounds must be >= 1");

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss;
    Vector best_dir;
    long best_score = -1;

    for (int start = 0; start < cfg.n_random_starts; ++start) {
        Vector b(p);
        do {
            for (double& v : b) v = gauss(rng);
        } while (norm2(b) < 1e-8);
        b = normalized(b);
        long score = classification_score(data, b);

        for (int round = 0; round < cfg.refine_rounds; ++round) {
            bool improved = false;
            for (std::size_t axis = 0; axis < p; ++axis) {
                Vector u(p, 0.0);
                u[axis] = 1.0;
                for (std::size_t j = 0; j < p; ++j) u[j] -= b[axis] * b[j];
                if (norm2(u) < 1e-9) continue;
                u = normalized(u);
                const auto angle = detail::best_arc(data, b, u, score);
                if (!angle) continue;
                Vector candidate = detail::rotate(b, u, *angle);
                const long s = classification_score(data, candidate);
                if (s > score) {
                    b = std::move(candidate);
                    score = s;
                    improved = true;
                }
            }
            if (!improved) break;
        }
        if (score > best_score) {
            best_score = score;
            best_dir = b;
        }
    }

    DirectionEstimate est;
    est.method = Method::MaxScore;
    est.direction = best_dir;
    est.raw_norm = 1.0;
    est.gamma_hat = response_mean(data.y);
    est.score = best_score;
    return est;
}

// ---- linearized maximum rank correlation -------------------------------------

/// Linearized maximum rank correlation:
/// normalize(S^{-1} sum_{i<j} sign(Y_i - Y_j)(X_i - X_j)) with S the sample
/// covariance of X. The pairwise sum is accumulated in O(n log n) as
/// sum_i c_i X_i with c_i = #{Y_j < Y_i} - #{Y_j > Y_i}.
inline DirectionEstimate lmrc(const Dataset& data) {
    data.validate();
    const std::size_t n = data.n(), p = data.p();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data.y[a] < data.y[b]; });

    std::vector<long> weight(n);
    std::size_t k = 0;
    while (k < n) {
        std::size_t end = k;
        while (end < n && data.y[order[end]] == data.y[order[k]]) ++end;
        const long less = static_cast<long>(k);
        const long greater = static_cast<long>(n - end);
        for (std::size_t m = k; m < end; ++m) weight[order[m]] = less - greater;
        k = end;
    }

    Vector sum(p, 0.0);
    double magnitude = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (weight[i] == 0) continue;
        for (std::size_t j = 0; j < p; ++j) sum[j] += static_cast<double>(weight[i]) * data.x(i, j);
        magnitude += std::abs(static_cast<double>(weight[i])) * norm2(data.x.row(i));
    }
    const double len = norm2(sum);
    if (!(len > 1e-12 * magnitude) || len == 0.0)
        throw DegenerateDirection("pairwise sign sum vanishes (constant response?)");

    const double pairs = static_cast<double>(n) * static_cast<double>(n);
    for (double& v : sum) v /= pairs;
    Vector raw;
    try {
        raw = pd_solve(sample_covariance(data.x), sum);
    } catch (const SingularMatrix& e) {
        throw SingularCovariance(std::string("covariate covariance is singular: ") + e.what());
    }

    DirectionEstimate est;
    est.method = Method::Lmrc;
    est.direction = normalized(raw);
    est.raw_norm = norm2(raw);
    est.gamma_hat = response_mean(data.y);
    return est;
}

// ---- probit ------------------------------------------------------------------

struct ProbitFit {
    double intercept = 0.0;
    Vector slopes;
    std::vector<double> loglik_trace; // one entry per accepted iterate, starting at zero
    int iterations = 0;
    bool converged = false;
};

inline constexpr double kProbitSeparationNorm = 1e4;

namespace detail {

inline double probit_loglik(const Dataset& data, double alpha, std::span<const double> b) {
    double ll = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        const double z = alpha + dot(data.x.row(i), b);
        ll += data.y[i] == 1.0 ? log_normal_cdf(z) : log_normal_cdf(-z);
    }
    return ll;
}

} // namespace detail

/// Newton-Raphson for P(Y = 1 | X) = Phi(alpha + X'b) with step halving.
inline ProbitFit fit_probit(const Dataset& data, int max_iter = 100, double tol = 1e-8) {
    data.validate();
    require_binary_response(data);
    const std::size_t n = data.n(), p = data.p(), q = p + 1;
    const double ones = std::accumulate(data.y.begin(), data.y.end(), 0.0);
    if (ones == 0.0 || ones == static_cast<double>(n))
        throw InvalidResponse("probit needs both response classes present");

    Vector theta(q, 0.0); // [alpha, b...]
    auto slopes_of = [&](const Vector& t) { return std::span<const double>(t).subspan(1); };
    double ll = detail::probit_loglik(data, theta[0], slopes_of(theta));

    ProbitFit fit;
    fit.loglik_trace.push_back(ll);
    Vector xt(q);
    for (int iter = 0; iter < max_iter; ++iter) {
        Vector grad(q, 0.0);
        Matrix info(q, q);
        for (std::size_t i = 0; i < n; ++i) {
            xt[0] = 1.0;
            for (std::size_t j = 0; j < p; ++j) xt[j + 1] = data.x(i, j);
            const double z = dot(xt, theta);
            double g, w;
            if (data.y[i] == 1.0) {
                const double h = normal_hazard_lower(z);
                g = h;
                w = h * (h + z);
            } else {
                const double h = normal_hazard_lower(-z);
                g = -h;
                w = h * (h - z);
            }
            for (std::size_t j = 0; j < q; ++j) {
                grad[j] += g * xt[j];
                for (std::size_t k = j; k < q; ++k) info(j, k) += w * xt[j] * xt[k];
            }
        }
        for (std::size_t j = 0; j < q; ++j)
            for (std::size_t k = 0; k < j; ++k) info(j, k) = info(k, j);

        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::abs(g));
        if (gmax <= tol) {
            fit.converged = true;
            break;
        }

        Vector step;
        try {
            step = pd_solve(SymMatrix(info), grad);
        } catch (const SingularMatrix&) {
            throw SingularMatrix("probit information matrix is singular");
        }

        bool accepted = false;
        double scale = 1.0;
        Vector candidate(q);
        double ll_candidate = ll;
        for (int halving = 0; halving <= 20; ++halving, scale *= 0.5) {
            for (std::size_t j = 0; j < q; ++j) candidate[j] = theta[j] + scale * step[j];
            ll_candidate = detail::probit_loglik(data, candidate[0], slopes_of(candidate));
            if (ll_candidate >= ll) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        theta = candidate;
        ll = ll_candidate;
        fit.loglik_trace.push_back(ll);
        fit.iterations = iter + 1;
        if (norm2(slopes_of(theta)) > kProbitSeparationNorm)
            throw SeparationError("slope norm exceeded 1e4; the classes appear to be separated");
    }

    // Complete separation: every observation fitted with near-certainty.
    bool all_certain = true;
    for (std::size_t i = 0; i < n && all_certain; ++i) {
        const double z = theta[0] + dot(data.x.row(i), slopes_of(theta));
        const double log_p = data.y[i] == 1.0 ? log_normal_cdf(z) : log_normal_cdf(-z);
        all_certain = log_p > std::log1p(-1e-6);
    }
    if (all_certain) throw SeparationError("every observation is fitted with probability > 1 - 1e-6");

    fit.intercept = theta[0];
    fit.slopes.assign(theta.begin() + 1, theta.end());
    return fit;
}

inline DirectionEstimate probit_mle(const Dataset& data, int max_iter = 100, double tol = 1e-8) {
    const ProbitFit fit = fit_probit(data, max_iter, tol);
    DirectionEstimate est;
    est.method = Method::Probit;
    est.raw_norm = norm2(fit.slopes);
    if (!(est.raw_norm > 0.0)) throw DegenerateDirection("probit slopes are all zero");
    est.direction = normalized(fit.slopes);
    est.gamma_hat = response_mean(data.y);
    est.iterations = fit.iterations;
    return est;
}

} // namespace dirset
