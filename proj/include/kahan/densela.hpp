#pragma once

// Small dense linear algebra for n up to a dozen or so: pivoted LU with a
// singularity test, determinants, adjugates, null spaces, and the two fitting
// utilities used by the drift and degree-bound diagnostics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kahan/errors.hpp"

namespace kahan {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;

/// LU factorization with partial pivoting, PA = LU.
///
/// A pivot counts as singular when its magnitude falls below
/// `1e-14 * row scale`, where the row scale is the largest entry of the
/// original row that ended up in the pivot position.
template <typename Scalar>
class LuFactor {
public:
    static constexpr double kPivotTolerance = 1e-14;

    explicit LuFactor(const Matrix<Scalar>& a) : lu_(a), perm_(a.rows()) {
        if (a.rows() != a.cols()) throw DimensionMismatch("LuFactor: matrix must be square");
        const Eigen::Index n = a.rows();
        Vector<Scalar> scale(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            perm_[i] = i;
            scale[i] = a.row(i).cwiseAbs().maxCoeff();
        }
        for (Eigen::Index k = 0; k < n; ++k) {
            Eigen::Index p = k;
            Scalar best = Scalar(0);
            for (Eigen::Index i = k; i < n; ++i) {
                const Scalar v = std::abs(lu_(i, k));
                if (v > best) {
                    best = v;
                    p = i;
                }
            }
            if (p != k) {
                lu_.row(p).swap(lu_.row(k));
                std::swap(perm_[p], perm_[k]);
                std::swap(scale[p], scale[k]);
                sign_ = -sign_;
            }
            const Scalar pivot = lu_(k, k);
            if (!(std::abs(pivot) >= Scalar(kPivotTolerance) * scale[k]) || scale[k] == Scalar(0)) {
                singular_ = true;
            }
            if (pivot == Scalar(0)) continue;
            for (Eigen::Index i = k + 1; i < n; ++i) {
                const Scalar m = lu_(i, k) / pivot;
                lu_(i, k) = m;
                if (m != Scalar(0)) lu_.row(i).tail(n - k - 1) -= m * lu_.row(k).tail(n - k - 1);
            }
        }
    }

    [[nodiscard]] bool singular() const noexcept { return singular_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return lu_.rows(); }

    [[nodiscard]] Scalar determinant() const {
        Scalar d = Scalar(sign_);
        for (Eigen::Index k = 0; k < lu_.rows(); ++k) d *= lu_(k, k);
        return d;
    }

    template <typename Rhs>
    [[nodiscard]] Matrix<Scalar> solve(const Eigen::MatrixBase<Rhs>& b) const {
        if (singular_) throw SingularMatrix("LuFactor::solve: pivot below tolerance");
        detail::require_dim(b.rows(), lu_.rows(), "LuFactor::solve");
        const Eigen::Index n = lu_.rows();
        Matrix<Scalar> y(n, b.cols());
        for (Eigen::Index i = 0; i < n; ++i) y.row(i) = b.row(perm_[i]);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < i; ++j) y.row(i) -= lu_(i, j) * y.row(j);
        for (Eigen::Index i = n - 1; i >= 0; --i) {
            for (Eigen::Index j = i + 1; j < n; ++j) y.row(i) -= lu_(i, j) * y.row(j);
            y.row(i) /= lu_(i, i);
        }
        return y;
    }

private:
    Matrix<Scalar> lu_;
    std::vector<Eigen::Index> perm_;
    int sign_ = 1;
    bool singular_ = false;
};

/// Solves Ax = b; throws SingularMatrix when a pivot is negligible.
template <typename Scalar>
[[nodiscard]] Vector<Scalar> solve(const Matrix<Scalar>& a, const Vector<Scalar>& b) {
    detail::require_dim(b.size(), a.rows(), "solve");
    return LuFactor<Scalar>(a).solve(b);
}

template <typename Scalar>
[[nodiscard]] Scalar determinant(const Matrix<Scalar>& a) {
    if (a.rows() != a.cols()) throw DimensionMismatch("determinant: matrix must be square");
    if (a.rows() == 0) return Scalar(1);
    return LuFactor<Scalar>(a).determinant();
}

/// adj(A), satisfying A adj(A) = det(A) I also for singular A.
///
/// Cofactor expansion up to 4x4; above that the SVD form
/// adj(A) = det(U) det(V) V adj(Sigma) U^T, which stays accurate at rank n-1.
template <typename Scalar>
[[nodiscard]] Matrix<Scalar> adjugate(const Matrix<Scalar>& a) {
    if (a.rows() != a.cols()) throw DimensionMismatch("adjugate: matrix must be square");
    const Eigen::Index n = a.rows();
    if (n == 0) return Matrix<Scalar>(0, 0);
    if (n == 1) return Matrix<Scalar>::Identity(1, 1);
    if (n <= 4) {
        Matrix<Scalar> adj(n, n);
        Matrix<Scalar> minor(n - 1, n - 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                for (Eigen::Index r = 0, mr = 0; r < n; ++r) {
                    if (r == i) continue;
                    for (Eigen::Index c = 0, mc = 0; c < n; ++c) {
                        if (c == j) continue;
                        minor(mr, mc++) = a(r, c);
                    }
                    ++mr;
                }
                const Scalar cof = ((i + j) % 2 == 0 ? Scalar(1) : Scalar(-1)) * determinant(minor);
                adj(j, i) = cof;
            }
        }
        return adj;
    }
    Eigen::JacobiSVD<Matrix<Scalar>> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sigma = svd.singularValues();
    Vector<Scalar> cof(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Scalar p = Scalar(1);
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) p *= sigma[j];
        cof[i] = p;
    }
    const Scalar s = determinant<Scalar>(svd.matrixU()) * determinant<Scalar>(svd.matrixV());
    return s * svd.matrixV() * cof.asDiagonal() * svd.matrixU().transpose();
}

/// Orthonormal basis (as columns) of {v : |Av| <= tol |A| |v|}.
template <typename Scalar>
[[nodiscard]] Matrix<Scalar> null_space(const Matrix<Scalar>& a, Scalar tol) {
    const Eigen::Index n = a.cols();
    if (a.rows() == 0 || n == 0) return Matrix<Scalar>::Identity(n, n);
    Eigen::JacobiSVD<Matrix<Scalar>> svd(a, Eigen::ComputeFullV);
    const auto& sigma = svd.singularValues();
    const Scalar cutoff = tol * (sigma.size() > 0 ? sigma[0] : Scalar(0));
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (sigma[i] > cutoff) ++rank;
    return svd.matrixV().rightCols(n - rank);
}

/// Numerical rank by singular-value thresholding at tol * sigma_max.
template <typename Scalar>
[[nodiscard]] Eigen::Index numerical_rank(const Matrix<Scalar>& a, Scalar tol) {
    return a.cols() - null_space(a, tol).cols();
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least-squares line through (ts, ys), centered for stability.
[[nodiscard]] inline LineFit fit_line(std::span<const double> ts, std::span<const double> ys) {
    if (ts.size() != ys.size()) throw DimensionMismatch("fit_line: ts and ys differ in length");
    if (ts.size() < 2) throw DegenerateFit("fit_line: need at least two samples");
    const auto m = static_cast<double>(ts.size());
    double tbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        tbar += ts[i];
        ybar += ys[i];
    }
    tbar /= m;
    ybar /= m;
    double stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double dt = ts[i] - tbar;
        stt += dt * dt;
        sty += dt * (ys[i] - ybar);
    }
    if (stt == 0.0) throw DegenerateFit("fit_line: all abscissae are equal");
    const double slope = sty / stt;
    return {slope, ybar - slope * tbar};
}

/// Chebyshev points of the first kind on [-1, 1].
[[nodiscard]] inline std::vector<double> chebyshev_points(std::size_t count) {
    std::vector<double> t(count);
    for (std::size_t j = 0; j < count; ++j)
        t[j] = std::cos(std::numbers::pi * (2.0 * static_cast<double>(j) + 1.0) /
                        (2.0 * static_cast<double>(count)));
    return t;
}

/// Smallest d <= dmax whose least-squares degree-d polynomial fits the
/// samples to relative residual 1e-6; dmax + 1 means "exceeds dmax".
///
/// The fit uses the Chebyshev basis on the sample interval, so it stays well
/// conditioned for the degrees that occur here.
[[nodiscard]] inline int estimate_polynomial_degree(std::span<const double> ts,
                                                    std::span<const double> values, int dmax,
                                                    double rel_tol = 1e-6) {
    if (ts.size() != values.size())
        throw DimensionMismatch("estimate_polynomial_degree: length mismatch");
    if (dmax < 0) throw std::invalid_argument("estimate_polynomial_degree: dmax < 0");
    std::vector<double> distinct(ts.begin(), ts.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < static_cast<std::size_t>(dmax) + 2)
        throw InsufficientSamples("estimate_polynomial_degree: need at least dmax+2 distinct points");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("estimate_polynomial_degree: non-finite sample");

    const auto m = static_cast<Eigen::Index>(ts.size());
    const double lo = distinct.front(), hi = distinct.back();
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    const Eigen::Map<const VectorXd> y(values.data(), m);
    const double ymax = y.cwiseAbs().maxCoeff();
    if (ymax == 0.0) return 0;

    MatrixXd basis(m, dmax + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double s = (ts[static_cast<std::size_t>(i)] - mid) / half;
        basis(i, 0) = 1.0;
        if (dmax >= 1) basis(i, 1) = s;
        for (int d = 2; d <= dmax; ++d) basis(i, d) = 2.0 * s * basis(i, d - 1) - basis(i, d - 2);
    }
    for (int d = 0; d <= dmax; ++d) {
        const auto cols = basis.leftCols(d + 1);
        const VectorXd coef = cols.colPivHouseholderQr().solve(y);
        const double resid = (cols * coef - y).cwiseAbs().maxCoeff();
        if (resid <= rel_tol * ymax) return d;
    }
    return dmax + 1;
}

}  // namespace kahan
