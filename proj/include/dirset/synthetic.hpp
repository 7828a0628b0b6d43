#pragma once

// Synthetic stand-in for a firm-level export participation dataset:
// binary exporter indicator against eight covariates, one of them binary
// and one the square of another, generated from a probit model.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dirset/estimator.hpp"
#include "dirset/simulate.hpp"

namespace dirset {

struct SyntheticDataset {
    Dataset data;
    std::string response_name;
    std::vector<std::string> covariate_names;
    Vector beta; // unit-norm slope direction of the generating probit
};

inline SyntheticDataset make_export_dataset(std::size_t n = 1614, std::uint64_t seed = 2006) {
    SyntheticDataset out;
    out.response_name = "expd_ford";
    out.covariate_names = {"lemp", "lprod", "lcapint", "intastr", "cmp", "cmp2", "ltastx", "sez"};
    out.beta = normalized(Vector{0.76, 0.02, 0.15, -0.08, -0.12, 0.08, -0.18, 0.58});
    const std::size_t p = out.covariate_names.size();

    Rng rng = stream_for(seed, 0);
    const Matrix chol = cholesky_factor(ar1_covariance(6, 0.3));
    const Matrix latent = draw_gaussian_design(n, chol, rng);
    std::bernoulli_distribution zone(0.3);
    std::normal_distribution<double> gauss;

    constexpr double signal = 1.5;
    out.data.x = Matrix(n, p);
    out.data.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double cmp = 0.5 * latent(i, 4);
        const double row[] = {latent(i, 0), latent(i, 1), latent(i, 2), latent(i, 3),
                              cmp,          cmp * cmp,    latent(i, 5), zone(rng) ? 1.0 : 0.0};
        double index = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            out.data.x(i, j) = row[j];
            index += row[j] * out.beta[j];
        }
        out.data.y[i] = signal * index - 0.3 + gauss(rng) > 0.0 ? 1.0 : 0.0;
    }
    return out;
}

} // namespace dirset
