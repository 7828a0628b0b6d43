#include <gtest/gtest.h>

#include "dirset/numkit.hpp"
#include "test_support.hpp"

using namespace dirset;
using namespace dirset::testing;

namespace {

const Matrix kToy{{1, 0}, {0, 1}, {-1, -1}};

Matrix product3(const Matrix& a, const Matrix& b, const Matrix& c) { return a * b * c; }

} // namespace

TEST(SampleCovariance, ToyDesign) {
    const SymMatrix s = sample_covariance(kToy);
    EXPECT_NEAR(s(0, 0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(s(0, 1), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(s(1, 0), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(s(1, 1), 2.0 / 3.0, 1e-15);
}

TEST(SampleCovariance, IdenticalRowsGiveZero) {
    const Matrix x{{1.5, -2, 3}, {1.5, -2, 3}, {1.5, -2, 3}, {1.5, -2, 3}};
    EXPECT_EQ(max_abs(sample_covariance(x).matrix()), 0.0);
}

TEST(SampleCovariance, TwoPointSample) {
    const double a = 1.7;
    const SymMatrix s = sample_covariance(Matrix{{a}, {-a}});
    EXPECT_NEAR(s(0, 0), a * a, 1e-15);
}

TEST(SampleCovariance, SingleRowIsInsufficient) {
    EXPECT_THROW(sample_covariance(Matrix{{1, 2}}), InsufficientData);
}

TEST(SampleCovariance, PositiveSemidefiniteOnRandomInputs) {
    Gen g(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t p = 1 + g() % 12;
        const std::size_t n = 2 + g() % 30; // includes n < p
        const auto eig = symmetric_eigen(sample_covariance(random_matrix(n, p, g, 3.0)));
        const double top = std::max(eig.values.back(), 0.0);
        EXPECT_GE(eig.values.front(), -1e-10 * top) << "trial " << trial;
    }
}

TEST(PdSolve, Identity) {
    const Vector x = pd_solve(SymMatrix::identity(2), Vector{3, 4});
    EXPECT_DOUBLE_EQ(x[0], 3.0);
    EXPECT_DOUBLE_EQ(x[1], 4.0);
}

TEST(PdSolve, ToyCovariance) {
    const Vector x = pd_solve(SymMatrix(Matrix{{2.0 / 3, 1.0 / 3}, {1.0 / 3, 2.0 / 3}}), Vector{1, 0});
    EXPECT_NEAR(x[0], 2.0, 1e-14);
    EXPECT_NEAR(x[1], -1.0, 1e-14);
}

TEST(PdSolve, RankOneIsSingular) {
    EXPECT_THROW(pd_solve(SymMatrix(Matrix{{1, 1}, {1, 1}}), Vector{1, 0}), SingularMatrix);
}

TEST(PdSolve, IndefiniteIsSingular) {
    EXPECT_THROW(pd_solve(SymMatrix(Matrix{{1, 2}, {2, 1}}), Vector{1, 0}), SingularMatrix);
}

TEST(PdSolve, ResidualOnRandomPdMatrices) {
    Gen g(12);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t p = 1 + g() % 15;
        const SymMatrix a = random_pd(p, g, 0.1);
        const Vector b = random_vector(p, g);
        const Vector x = pd_solve(a, b);
        const Vector back = a * x;
        EXPECT_LE(max_abs_diff(back, b), 1e-8 * norm2(b)) << "trial " << trial;
    }
}

TEST(PdSolve, AgreesWithGaussJordan) {
    Gen g(13);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t p = 2 + g() % 8;
        const SymMatrix a = random_pd(p, g);
        const Vector b = random_vector(p, g);
        EXPECT_LE(max_abs_diff(pd_solve(a, b), gauss_jordan_inverse(a.matrix()) * b), 1e-10);
    }
}

TEST(Cholesky, Identity) {
    EXPECT_EQ(cholesky_factor(SymMatrix::identity(3)), Matrix::identity(3));
}

TEST(Cholesky, Diagonal) {
    const Matrix l = cholesky_factor(SymMatrix(Matrix{{4, 0}, {0, 9}}));
    EXPECT_EQ(l, (Matrix{{2, 0}, {0, 3}}));
}

TEST(Cholesky, Ar1TwoByTwo) {
    const Matrix l = cholesky_factor(SymMatrix(Matrix{{1, 0.6}, {0.6, 1}}));
    EXPECT_NEAR(l(0, 0), 1.0, 1e-15);
    EXPECT_EQ(l(0, 1), 0.0);
    EXPECT_NEAR(l(1, 0), 0.6, 1e-15);
    EXPECT_NEAR(l(1, 1), 0.8, 1e-15);
}

TEST(Cholesky, RoundTripOnRandomPdMatrices) {
    Gen g(14);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t p = 1 + g() % 15;
        const SymMatrix a = random_pd(p, g, 0.5);
        const Matrix l = cholesky_factor(a);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i + 1; j < p; ++j) EXPECT_EQ(l(i, j), 0.0);
        EXPECT_LE(max_abs_diff(l * l.transpose(), a.matrix()), 1e-10 * max_abs(a.matrix())) << "trial " << trial;
    }
}

TEST(SymMatrix, RejectsAsymmetricAndNonFinite) {
    EXPECT_THROW(SymMatrix(Matrix{{1, 2}, {3, 1}}), InvalidArgument);
    EXPECT_THROW(SymMatrix(Matrix{{1, 2, 3}}), InvalidArgument);
    EXPECT_THROW(SymMatrix(Matrix{{std::nan(""), 0}, {0, 1}}), InvalidArgument);
}

TEST(SymmetricEigen, ReconstructsMatrix) {
    Gen g(15);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t p = 1 + g() % 12;
        const SymMatrix a = random_pd(p, g, -0.5); // indefinite in general
        const auto eig = symmetric_eigen(a);
        Matrix d(p, p);
        for (std::size_t k = 0; k < p; ++k) d(k, k) = eig.values[k];
        const Matrix back = product3(eig.vectors, d, eig.vectors.transpose());
        EXPECT_LE(max_abs_diff(back, a.matrix()), 1e-10 * max_abs(a.matrix()));
        for (std::size_t k = 1; k < p; ++k) EXPECT_LE(eig.values[k - 1], eig.values[k]);
        EXPECT_LE(max_abs_diff(eig.vectors.transpose() * eig.vectors, Matrix::identity(p)), 1e-12);
    }
}

TEST(MoorePenrose, DiagonalWithZero) {
    const auto pinv = moore_penrose(SymMatrix(Matrix{{2, 0}, {0, 0}}));
    EXPECT_EQ(pinv.rank, 1u);
    EXPECT_NEAR(pinv.inverse(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(pinv.inverse(0, 1), 0.0, 1e-15);
    EXPECT_NEAR(pinv.inverse(1, 1), 0.0, 1e-15);
}

TEST(MoorePenrose, Identity) {
    const auto pinv = moore_penrose(SymMatrix::identity(4));
    EXPECT_EQ(pinv.rank, 4u);
    EXPECT_LE(max_abs_diff(pinv.inverse.matrix(), Matrix::identity(4)), 1e-15);
}

TEST(MoorePenrose, RankOneProjectorIsItsOwnInverse) {
    Gen g(16);
    const Vector b = random_unit(5, g);
    Matrix bb(5, 5);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) bb(i, j) = b[i] * b[j];
    const auto pinv = moore_penrose(SymMatrix(bb));
    EXPECT_EQ(pinv.rank, 1u);
    EXPECT_LE(max_abs_diff(pinv.inverse.matrix(), bb), 1e-12);
}

TEST(MoorePenrose, PenroseIdentitiesOnRandomSymmetricMatrices) {
    Gen g(17);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t p = 1 + g() % 10;
        const std::size_t rank = g() % (p + 1);
        Vector spectrum(p, 0.0);
        for (std::size_t k = 0; k < rank; ++k) {
            double v = u(g);
            while (std::abs(v) < 0.05) v = u(g);
            spectrum[k] = v;
        }
        const SymMatrix a = symmetric_with_spectrum(spectrum, g);
        const auto pinv = moore_penrose(a, 1e-9);
        EXPECT_EQ(pinv.rank, rank) << "trial " << trial;
        const Matrix& am = a.matrix();
        const Matrix& ap = pinv.inverse.matrix();
        const double scale = std::max(1.0, max_abs(am));
        EXPECT_LE(max_abs_diff(product3(am, ap, am), am), 1e-8 * scale) << "trial " << trial;
        EXPECT_LE(max_abs_diff(product3(ap, am, ap), ap), 1e-8 * std::max(1.0, max_abs(ap))) << "trial " << trial;
        const Matrix aap = am * ap;
        EXPECT_LE(max_abs_diff(aap, aap.transpose()), 1e-8) << "trial " << trial;
    }
}

TEST(Vectors, DotAndScaledNorm) {
    EXPECT_DOUBLE_EQ(dot(Vector{1, 2, 3}, Vector{4, -5, 6}), 12.0);
    EXPECT_DOUBLE_EQ(norm2(Vector{3, 4}), 5.0);
    EXPECT_DOUBLE_EQ(norm2(Vector{3e200, 4e200}), 5e200);
    EXPECT_EQ(norm2(Vector{0, 0}), 0.0);
}
