#pragma once

// Small dense linear algebra for p <= ~15: covariance, SPD solves,
// symmetric eigendecomposition and the pseudoinverse built on it.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dirset/error.hpp"

namespace dirset {

using Vector = std::vector<double>;

/// Row-major dense matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::initializer_list<std::initializer_list<double>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& r : init) {
            if (r.size() != cols_) throw InvalidArgument("ragged matrix initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

    Vector column(std::size_t j) const {
        Vector c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    const std::vector<double>& data() const noexcept { return data_; }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw InvalidArgument("matrix product dimension mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline Vector operator*(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw InvalidArgument("matrix-vector dimension mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) {
    // scaled to avoid overflow for large-magnitude inputs
    double scale = 0.0;
    for (double v : a) scale = std::max(scale, std::abs(v));
    if (scale == 0.0 || !std::isfinite(scale)) return scale;
    double s = 0.0;
    for (double v : a) s += (v / scale) * (v / scale);
    return scale * std::sqrt(s);
}

inline double frobenius_norm(const Matrix& a) { return norm2(a.data()); }

/// Symmetric matrix. Construction symmetrizes entries that agree to 1e-10 relative.
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(Matrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) throw InvalidArgument("SymMatrix must be square");
        double scale = 0.0;
        for (double v : m_.data()) {
            if (!std::isfinite(v)) throw InvalidArgument("SymMatrix entries must be finite");
            scale = std::max(scale, std::abs(v));
        }
        const std::size_t n = m_.rows();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                if (std::abs(m_(i, j) - m_(j, i)) > 1e-10 * scale)
                    throw InvalidArgument("SymMatrix is not symmetric");
                const double avg = 0.5 * (m_(i, j) + m_(j, i));
                m_(i, j) = avg;
                m_(j, i) = avg;
            }
    }

    static SymMatrix identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }

    std::size_t dim() const noexcept { return m_.rows(); }
    double operator()(std::size_t i, std::size_t j) const noexcept { return m_(i, j); }
    const Matrix& matrix() const noexcept { return m_; }

    double max_abs_diagonal() const noexcept {
        double d = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) d = std::max(d, std::abs(m_(i, i)));
        return d;
    }

private:
    Matrix m_;
};

inline Vector operator*(const SymMatrix& a, std::span<const double> x) { return a.matrix() * x; }

inline Vector column_means(const Matrix& x) {
    Vector mean(x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) mean[j] += x(i, j);
    for (double& m : mean) m /= static_cast<double>(x.rows());
    return mean;
}

/// Centered second-moment matrix with the 1/n normalizer.
inline SymMatrix sample_covariance(const Matrix& x) {
    const std::size_t n = x.rows(), p = x.cols();
    if (n < 2) throw InsufficientData("sample covariance needs at least 2 rows, got " + std::to_string(n));
    const Vector mean = column_means(x);
    Matrix s(p, p);
    Vector centered(p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            if (!std::isfinite(x(i, j))) throw InvalidArgument("non-finite covariate value");
            centered[j] = x(i, j) - mean[j];
        }
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = j; k < p; ++k) s(j, k) += centered[j] * centered[k];
    }
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = j; k < p; ++k) {
            s(j, k) /= static_cast<double>(n);
            s(k, j) = s(j, k);
        }
    return SymMatrix(std::move(s));
}

/// Lower-triangular L with L L' = A.
inline Matrix cholesky_factor(const SymMatrix& a) {
    const std::size_t n = a.dim();
    const double threshold =
        static_cast<double>(n) * std::numeric_limits<double>::epsilon() * a.max_abs_diagonal();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > threshold))
            throw SingularMatrix("non-positive pivot at index " + std::to_string(j));
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

/// Solves L L' x = b given the lower Cholesky factor.
inline Vector cholesky_solve(const Matrix& l, std::span<const double> b) {
    const std::size_t n = l.rows();
    if (b.size() != n) throw InvalidArgument("right-hand side dimension mismatch");
    Vector x(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) x[i] -= l(i, k) * x[k];
        x[i] /= l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t k = i + 1; k < n; ++k) x[i] -= l(k, i) * x[k];
        x[i] /= l(i, i);
    }
    return x;
}

inline Vector pd_solve(const SymMatrix& a, std::span<const double> b) {
    return cholesky_solve(cholesky_factor(a), b);
}

struct EigenDecomposition {
    Vector values;  // ascending
    Matrix vectors; // column k pairs with values[k]
};

/// Cyclic Jacobi iteration; stops once the off-diagonal mass is below
/// 1e-14 of the Frobenius norm.
inline EigenDecomposition symmetric_eigen(const SymMatrix& sym) {
    const std::size_t n = sym.dim();
    Matrix a = sym.matrix();
    Matrix v = Matrix::identity(n);
    const double total = frobenius_norm(a);

    auto off_diagonal = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < 100 && total > 0.0; ++sweep) {
        if (off_diagonal() <= 1e-14 * total) break;
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p), aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
                rotated = true;
            }
        }
        if (!rotated) break;
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

    EigenDecomposition out{Vector(n), Matrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

struct PseudoInverse {
    SymMatrix inverse;
    std::size_t rank = 0;
};

inline double default_rank_tolerance(std::size_t dim) {
    return static_cast<double>(dim) * std::numeric_limits<double>::epsilon();
}

/// Eigen-based Moore-Penrose inverse. Eigenvalues with |l| <= rel_tol * max|l|
/// are treated as zero.
inline PseudoInverse moore_penrose(const SymMatrix& a, std::optional<double> rel_tol = std::nullopt) {
    const std::size_t n = a.dim();
    const double tol = rel_tol.value_or(default_rank_tolerance(n));
    const auto eig = symmetric_eigen(a);
    double max_abs = 0.0;
    for (double l : eig.values) max_abs = std::max(max_abs, std::abs(l));

    Matrix inv(n, n);
    std::size_t rank = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double l = eig.values[k];
        if (max_abs == 0.0 || std::abs(l) <= tol * max_abs) continue;
        ++rank;
        const double w = 1.0 / l;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) inv(i, j) += w * eig.vectors(i, k) * eig.vectors(j, k);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double avg = 0.5 * (inv(i, j) + inv(j, i));
            inv(i, j) = avg;
            inv(j, i) = avg;
        }
    return {SymMatrix(std::move(inv)), rank};
}

} // namespace dirset
