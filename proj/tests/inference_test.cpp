#include <gtest/gtest.h>

#include "dirset/estimator.hpp"
#include "dirset/inference.hpp"
#include "dirset/simulate.hpp"
#include "test_support.hpp"

using namespace dirset;
using namespace dirset::testing;

namespace {

Scenario case_scenario(Case c, std::size_t n, std::uint64_t seed, std::size_t p = 3) {
    Scenario sc;
    sc.case_id = c;
    sc.n = n;
    sc.p = p;
    sc.rho = 0.0;
    sc.reps = 1;
    sc.seed = seed;
    sc.estimators = {Method::NewCentered};
    return sc;
}

Dataset random_continuous(std::size_t n, std::size_t p, Gen& g) {
    Dataset d{random_matrix(n, p, g), Vector(n)};
    const Vector b = random_unit(p, g);
    std::normal_distribution<double> z;
    for (std::size_t i = 0; i < n; ++i) d.y[i] = 1.0 / (1.0 + std::exp(-2.0 * dot(d.x.row(i), b))) + 0.2 * z(g);
    return d;
}

// Centers X and rescales it so that its 1/n sample covariance is exactly I.
Matrix whiten(const Matrix& x) {
    const std::size_t n = x.rows(), p = x.cols();
    const Vector mean = column_means(x);
    Matrix c(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) c(i, j) = x(i, j) - mean[j];
    const Matrix l = cholesky_factor(sample_covariance(c));
    const Matrix l_inv_t = gauss_jordan_inverse(l).transpose();
    return c * l_inv_t;
}

double frobenius_diff(const SymMatrix& a, const SymMatrix& b) {
    Matrix d(a.dim(), a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j) d(i, j) = a(i, j) - b(i, j);
    return frobenius_norm(d);
}

} // namespace

TEST(ChiSquare, UpperTailExamples) {
    EXPECT_EQ(chi_square_upper_tail(0.0, 3), 1.0);
    EXPECT_NEAR(chi_square_upper_tail(5.991464547107979, 2), 0.05, 1e-12);
    EXPECT_NEAR(chi_square_upper_tail(3.841458820694124, 1), 0.05, 1e-12);
}

TEST(ChiSquare, OneDofMatchesNormalTail) {
    for (double x = 0.01; x < 60.0; x *= 1.3)
        EXPECT_NEAR(chi_square_upper_tail(x, 1), std::erfc(std::sqrt(x / 2.0)), 1e-12) << x;
}

TEST(ChiSquare, TwoDofIsExponential) {
    for (double x = 0.0; x <= 50.0; x += 0.25)
        EXPECT_NEAR(chi_square_upper_tail(x, 2), std::exp(-x / 2.0), 1e-10) << x;
}

TEST(ChiSquare, EvenDofClosedForm) {
    // Q(k, x/2) = exp(-x/2) sum_{j<k} (x/2)^j / j!
    for (int k : {2, 3, 5, 8}) {
        for (double x = 0.5; x < 80.0; x *= 1.5) {
            double term = 1.0, sum = 1.0;
            for (int j = 1; j < k; ++j) {
                term *= (x / 2.0) / j;
                sum += term;
            }
            EXPECT_NEAR(chi_square_upper_tail(x, 2 * k), std::exp(-x / 2.0) * sum, 1e-11) << k << ' ' << x;
        }
    }
}

TEST(ChiSquare, QuantileInvertsTail) {
    EXPECT_NEAR(chi_square_upper_quantile(0.05, 1), 3.841458820694124, 1e-9);
    EXPECT_NEAR(chi_square_upper_quantile(0.05, 2), 5.991464547107979, 1e-9);
    EXPECT_NEAR(chi_square_upper_quantile(0.01, 14), 29.141237740672796, 1e-8);
    for (int dof : {1, 2, 4, 9, 14})
        for (double q : {0.9, 0.5, 0.1, 0.01, 1e-4})
            EXPECT_NEAR(chi_square_upper_tail(chi_square_upper_quantile(q, dof), dof), q, 1e-10 * std::max(q, 1e-2));
}

TEST(ChiSquare, MonotoneInStatistic) {
    for (int dof : {1, 2, 3, 7}) {
        double prev = 1.0;
        for (double x = 0.0; x < 100.0; x += 0.37) {
            const double q = chi_square_upper_tail(x, dof);
            EXPECT_LE(q, prev);
            EXPECT_GE(q, 0.0);
            prev = q;
        }
    }
}

TEST(Influence, MatchesIndependentRecomputation) {
    Gen g(31);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t p = 2 + g() % 5;
        const Dataset d = random_continuous(60 + g() % 200, p, g);
        const auto est = estimate_centered(d);
        const Matrix psi = influence_vectors(d, est, true);

        const std::size_t n = d.n();
        const Vector xbar = column_means(d.x);
        Matrix s(p, p);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < p; ++a)
                for (std::size_t b = 0; b < p; ++b)
                    s(a, b) += (d.x(i, a) - xbar[a]) * (d.x(i, b) - xbar[b]) / static_cast<double>(n);
        const Matrix s_inv = gauss_jordan_inverse(s);
        const Vector& beta = est.direction;
        double ybar = 0.0;
        for (double y : d.y) ybar += y / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            Vector xt(p), u(p);
            for (std::size_t a = 0; a < p; ++a) xt[a] = d.x(i, a) - xbar[a];
            const double xb = dot(xt, beta);
            for (std::size_t a = 0; a < p; ++a)
                u[a] = d.y[i] * xt[a] / est.lambda_hat - xt[a] * xb - ybar * xt[a] / est.lambda_hat;
            Vector v = s_inv * u;
            const double along = dot(v, beta);
            for (std::size_t a = 0; a < p; ++a) v[a] -= along * beta[a];
            for (std::size_t a = 0; a < p; ++a)
                EXPECT_NEAR(psi(i, a), v[a], 1e-9 * (1.0 + std::abs(v[a]))) << "trial " << trial << " row " << i;
        }
    }
}

TEST(Influence, NoiselessLinearModelOnWhitenedDesign) {
    // With sample covariance exactly I and zero mean, psi_i reduces to
    // lambda^-1 P (Y_i X_i - gamma X_i) - P X_i X_i' d.
    Gen g(32);
    const std::size_t n = 400, p = 3;
    Dataset d{whiten(random_matrix(n, p, g)), Vector(n)};
    for (std::size_t i = 0; i < n; ++i) d.y[i] = d.x(i, 0);
    const auto est = estimate_centered(d);
    EXPECT_NEAR(est.direction[0], 1.0, 1e-12);
    const Matrix psi = influence_vectors(d, est, true);
    const Vector& b = est.direction;
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = d.x.row(i);
        Vector v(p);
        for (std::size_t a = 0; a < p; ++a)
            v[a] = (d.y[i] * x[a] - est.gamma_hat * x[a]) / est.lambda_hat - x[a] * dot(x, b);
        const double along = dot(v, b);
        for (std::size_t a = 0; a < p; ++a) EXPECT_NEAR(psi(i, a), v[a] - along * b[a], 1e-10);
    }
}

TEST(Covariance, TwoDimensionalAnnihilatesDirection) {
    Gen g(33);
    for (int trial = 0; trial < 20; ++trial) {
        const Dataset d = random_continuous(50 + g() % 100, 2, g);
        const auto est = estimate_centered(d);
        const auto cov = covariance_centered(d, est);
        EXPECT_LE(cov.rank, 1u);
        const Vector sd = cov.sigma_beta * est.direction;
        EXPECT_LE(norm2(sd), 1e-6 * frobenius_norm(cov.sigma_beta.matrix()));
    }
}

TEST(Covariance, TangentPlaneAndPsdOnRandomInputs) {
    Gen g(34);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t p = 2 + g() % 8;
        const Dataset d = random_continuous(p + 30 + g() % 300, p, g);
        for (bool centered : {true, false}) {
            const auto est = centered ? estimate_centered(d) : estimate_uncentered(d);
            const auto cov = centered ? covariance_centered(d, est) : covariance_uncentered(d, est);
            const double fro = frobenius_norm(cov.sigma_beta.matrix());
            EXPECT_LE(norm2(cov.sigma_beta * est.direction), 1e-6 * fro);
            const auto eig = symmetric_eigen(cov.sigma_beta);
            EXPECT_GE(eig.values.front(), -1e-8 * std::max(1.0, eig.values.back()));
            EXPECT_LE(cov.rank, p - 1);
        }
    }
}

TEST(Covariance, RankIsPMinusOneOnCaseI) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = generate(case_scenario(Case::I, 500, seed), 0);
        const auto est = estimate_centered(s.data);
        EXPECT_EQ(covariance_centered(s.data, est).rank, 2u);
    }
}

TEST(Covariance, DiagonalScalesInverselyWithN) {
    // Average sigma_beta / n over repetitions at n = 500 and n = 2000.
    auto mean_scaled_diag = [](std::size_t n) {
        Vector acc(3, 0.0);
        const int reps = 40;
        for (int r = 0; r < reps; ++r) {
            Scenario sc = case_scenario(Case::I, n, 77);
            sc.fixed_beta = true;
            const auto s = generate(sc, static_cast<std::size_t>(r));
            const auto cov = covariance_centered(s.data, estimate_centered(s.data));
            for (std::size_t j = 0; j < 3; ++j) acc[j] += cov.sigma_beta(j, j) / static_cast<double>(n) / reps;
        }
        return acc;
    };
    const Vector small = mean_scaled_diag(500), large = mean_scaled_diag(2000);
    double ratio_sum = 0.0, trace_small = 0.0, trace_large = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
        trace_small += small[j];
        trace_large += large[j];
    }
    ratio_sum = trace_small / trace_large;
    EXPECT_NEAR(ratio_sum, 4.0, 1.0);
}

TEST(Covariance, CenteredAndUncenteredAgreeWhenResponseMeanIsZero) {
    // Case C1 (Y = X'b + e) has E[Y] = 0, so the gamma term vanishes in the limit.
    const auto s = generate(case_scenario(Case::C1, 5000, 35), 0);
    const auto c = covariance_centered(s.data, estimate_centered(s.data));
    const auto u = covariance_uncentered(s.data, estimate_uncentered(s.data));
    EXPECT_LE(frobenius_diff(c.sigma_beta, u.sigma_beta), 0.10 * frobenius_norm(c.sigma_beta.matrix()));
}

TEST(Covariance, UnstableLambda) {
    Dataset d{Matrix{{1, 0}, {0, 1}, {-1, -1}, {0.5, 0.2}}, Vector{1, 0, 0, 1}};
    auto est = estimate_centered(d);
    est.lambda_hat = 5e-9;
    EXPECT_THROW(covariance_centered(d, est), UnstableLambda);
}

TEST(Covariance, SingularDesign) {
    const Dataset d{Matrix{{1, 2}, {2, 4}, {3, 6}}, Vector{0, 1, 1}};
    DirectionEstimate est;
    est.direction = {1.0, 0.0};
    est.lambda_hat = 1.0;
    est.gamma_hat = 2.0 / 3.0;
    EXPECT_THROW(covariance_centered(d, est), SingularCovariance);
}

TEST(Wald, ZeroDeviation) {
    const auto s = generate(case_scenario(Case::I, 500, 41), 0);
    const auto est = estimate_centered(s.data);
    const auto cov = covariance_centered(s.data, est);
    const auto w = wald_test(est, cov, est.direction, std::vector<double>{0.05});
    EXPECT_NEAR(w.statistic, 0.0, 1e-20);
    EXPECT_EQ(w.p_value, 1.0);
    EXPECT_EQ(w.dof, 2);
    EXPECT_FALSE(w.reject_at.at(0.05));
    EXPECT_TRUE(w.warnings.empty());
}

TEST(Wald, NullMustBeUnitAndMatchDimension) {
    const auto s = generate(case_scenario(Case::I, 200, 42), 0);
    const auto est = estimate_centered(s.data);
    const auto cov = covariance_centered(s.data, est);
    EXPECT_THROW(wald_test(est, cov, Vector{1.0, 1.0, 0.0}), InvalidNull);
    EXPECT_THROW(wald_test(est, cov, Vector{1.0, 0.0}), InvalidNull);
}

TEST(Wald, AntipodeLiesInCovarianceNullSpace) {
    // d - (-d) = 2d is annihilated by the pseudoinverse, so W* = 0; the
    // opposite-hemisphere warning is the only signal.
    const auto s = generate(case_scenario(Case::I, 500, 43), 0);
    const auto est = estimate_centered(s.data);
    const auto cov = covariance_centered(s.data, est);
    Vector anti = est.direction;
    for (double& v : anti) v = -v;
    const auto w = wald_test(est, cov, anti, std::vector<double>{0.05});
    EXPECT_LT(w.statistic, 1e-6);
    EXPECT_FALSE(w.reject_at.at(0.05));
    ASSERT_FALSE(w.warnings.empty());
    EXPECT_NE(w.warnings.back().find("opposite hemisphere"), std::string::npos);
}

TEST(Wald, RejectsADistantNull) {
    const auto s = generate(case_scenario(Case::I, 500, 44), 0);
    const auto est = estimate_centered(s.data);
    const auto cov = covariance_centered(s.data, est);
    // Rotate the true direction by 90 degrees within a coordinate plane.
    Vector other(3, 0.0);
    const Vector& b = s.beta;
    other[0] = -b[1];
    other[1] = b[0];
    const Vector null0 = normalized(other);
    const auto w = wald_test(est, cov, null0, std::vector<double>{0.05, 0.01});
    EXPECT_LT(w.p_value, 1e-6);
    EXPECT_TRUE(w.reject_at.at(0.01));
}

TEST(Wald, ResponseScaleInvariance) {
    Gen g(45);
    std::uniform_real_distribution<double> u(0.1, 20.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t p = 2 + g() % 4;
        Dataset d = random_continuous(200, p, g);
        const Vector null0 = random_unit(p, g);
        const auto est = estimate_centered(d);
        const auto w = wald_test(est, covariance_centered(d, est), null0);
        const double c = u(g);
        for (double& y : d.y) y *= c;
        const auto est2 = estimate_centered(d);
        const auto w2 = wald_test(est2, covariance_centered(d, est2), null0);
        EXPECT_NEAR(w2.statistic, w.statistic, 1e-6 * w.statistic);
    }
}

TEST(Wald, PValueConsistentWithTail) {
    const auto s = generate(case_scenario(Case::I, 300, 46), 0);
    const auto est = estimate_centered(s.data);
    const auto cov = covariance_centered(s.data, est);
    const auto w = wald_test(est, cov, s.beta, std::vector<double>{0.1, 0.05});
    EXPECT_DOUBLE_EQ(w.p_value, chi_square_upper_tail(w.statistic, 2));
    EXPECT_EQ(w.reject_at.at(0.05), w.p_value < 0.05);
    EXPECT_EQ(w.reject_at.at(0.1), w.p_value < 0.1);
}

TEST(StandardErrors, SqrtDiagonalOverN) {
    const auto s = generate(case_scenario(Case::I, 400, 47), 0);
    const auto cov = covariance_centered(s.data, estimate_centered(s.data));
    const Vector se = cov.standard_errors();
    for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(se[j], std::sqrt(cov.sigma_beta(j, j) / 400.0));
}
