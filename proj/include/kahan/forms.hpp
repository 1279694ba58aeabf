#pragma once

// Quadratic vector fields f(x) = Q(x) + Bx + c, cubic Hamiltonians, constant
// Poisson structures, and the maps between them.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kahan/densela.hpp"
#include "kahan/errors.hpp"

namespace kahan {

/// f(x) = Q(x) + Bx + c with Q_i(x) = x^T T_i x and every T_i symmetric.
template <typename Scalar>
class QuadraticField {
public:
    using VectorType = Vector<Scalar>;
    using MatrixType = Matrix<Scalar>;

    QuadraticField() = default;

    /// Takes ownership of the coefficients; each T_i must be symmetric.
    QuadraticField(std::vector<MatrixType> t, MatrixType b, VectorType c)
        : t_(std::move(t)), b_(std::move(b)), c_(std::move(c)) {
        const auto n = static_cast<Eigen::Index>(t_.size());
        detail::require_dim(b_.rows(), n, "QuadraticField: B rows");
        detail::require_dim(b_.cols(), n, "QuadraticField: B cols");
        detail::require_dim(c_.size(), n, "QuadraticField: c");
        for (const auto& ti : t_) {
            detail::require_dim(ti.rows(), n, "QuadraticField: T_i rows");
            detail::require_dim(ti.cols(), n, "QuadraticField: T_i cols");
            if (ti != ti.transpose())
                throw InvalidStructure("QuadraticField: T_i must be symmetric in its last two slots");
        }
    }

    /// Symmetrizes each T_i first; x^T T_i x is unchanged.
    static QuadraticField from_coefficients(std::vector<MatrixType> t, MatrixType b, VectorType c) {
        for (auto& ti : t) ti = (Scalar(0.5) * (ti + ti.transpose())).eval();
        return QuadraticField(std::move(t), std::move(b), std::move(c));
    }

    static QuadraticField linear(MatrixType b, VectorType c) {
        const auto n = b.rows();
        return QuadraticField(std::vector<MatrixType>(static_cast<std::size_t>(n), MatrixType::Zero(n, n)),
                              std::move(b), std::move(c));
    }

    [[nodiscard]] Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(t_.size()); }
    [[nodiscard]] const std::vector<MatrixType>& quadratic() const noexcept { return t_; }
    [[nodiscard]] const MatrixType& linear_part() const noexcept { return b_; }
    [[nodiscard]] const VectorType& constant_part() const noexcept { return c_; }

    /// M(x) with M(x) y = Q(x, y), i.e. M(x)_{ik} = sum_j T_{ijk} x_j.
    [[nodiscard]] MatrixType contract(const VectorType& x) const {
        const Eigen::Index n = dim();
        MatrixType m(n, n);
        for (Eigen::Index i = 0; i < n; ++i) m.row(i) = x.transpose() * t_[static_cast<std::size_t>(i)];
        return m;
    }

    template <typename NewScalar>
    [[nodiscard]] QuadraticField<NewScalar> cast() const {
        std::vector<Matrix<NewScalar>> t;
        for (const auto& ti : t_) t.push_back(ti.template cast<NewScalar>());
        return QuadraticField<NewScalar>(std::move(t), b_.template cast<NewScalar>(), c_.template cast<NewScalar>());
    }

private:
    std::vector<MatrixType> t_;
    MatrixType b_;
    VectorType c_;
};

template <typename Scalar>
[[nodiscard]] Vector<Scalar> quadratic_form(const QuadraticField<Scalar>& vf, const Vector<Scalar>& x) {
    detail::require_dim(x.size(), vf.dim(), "quadratic_form");
    Vector<Scalar> q(vf.dim());
    for (Eigen::Index i = 0; i < vf.dim(); ++i) q[i] = x.dot(vf.quadratic()[static_cast<std::size_t>(i)] * x);
    return q;
}

template <typename Scalar>
[[nodiscard]] Vector<Scalar> evaluate(const QuadraticField<Scalar>& vf, const Vector<Scalar>& x) {
    detail::require_dim(x.size(), vf.dim(), "evaluate");
    return quadratic_form(vf, x) + vf.linear_part() * x + vf.constant_part();
}

/// The symmetric bilinear form Q(x, y) = (Q(x+y) - Q(x) - Q(y)) / 2.
template <typename Scalar>
[[nodiscard]] Vector<Scalar> polarize(const QuadraticField<Scalar>& vf, const Vector<Scalar>& x,
                                      const Vector<Scalar>& y) {
    detail::require_dim(x.size(), vf.dim(), "polarize");
    detail::require_dim(y.size(), vf.dim(), "polarize");
    Vector<Scalar> q(vf.dim());
    for (Eigen::Index i = 0; i < vf.dim(); ++i) q[i] = x.dot(vf.quadratic()[static_cast<std::size_t>(i)] * y);
    return q;
}

/// f'(x) = 2 M(x) + B; affine in x.
template <typename Scalar>
[[nodiscard]] Matrix<Scalar> jacobian(const QuadraticField<Scalar>& vf, const Vector<Scalar>& x) {
    detail::require_dim(x.size(), vf.dim(), "jacobian");
    return Scalar(2) * vf.contract(x) + vf.linear_part();
}

/// f''(u, v) = 2 Q(u, v), independent of the base point.
template <typename Scalar>
[[nodiscard]] Vector<Scalar> second_derivative(const QuadraticField<Scalar>& vf, const Vector<Scalar>& u,
                                               const Vector<Scalar>& v) {
    return Scalar(2) * polarize(vf, u, v);
}

/// H(x) = C(x,x,x) + x^T S x + l.x + d with C fully symmetric.
///
/// The cubic part is stored as slices C_i (n x n, symmetric) so that
/// C(x,y,z) = sum_i x_i y^T C_i z. With this convention grad H(x).v = 3 C(x,x,v)
/// + 2 x^T S v + l.v holds literally.
template <typename Scalar>
class CubicHamiltonian {
public:
    using VectorType = Vector<Scalar>;
    using MatrixType = Matrix<Scalar>;

    CubicHamiltonian() = default;

    CubicHamiltonian(std::vector<MatrixType> cubic, MatrixType s, VectorType l, Scalar d)
        : c_(std::move(cubic)), s_(std::move(s)), l_(std::move(l)), d_(d) {
        const auto n = static_cast<Eigen::Index>(c_.size());
        detail::require_dim(s_.rows(), n, "CubicHamiltonian: S rows");
        detail::require_dim(s_.cols(), n, "CubicHamiltonian: S cols");
        detail::require_dim(l_.size(), n, "CubicHamiltonian: l");
        for (const auto& ci : c_) {
            detail::require_dim(ci.rows(), n, "CubicHamiltonian: C_i rows");
            detail::require_dim(ci.cols(), n, "CubicHamiltonian: C_i cols");
        }
        if (s_ != s_.transpose()) throw InvalidStructure("CubicHamiltonian: S must be symmetric");
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index k = 0; k < n; ++k) {
                    const Scalar v = coef(i, j, k);
                    if (v != coef(j, i, k) || v != coef(k, j, i) || v != coef(i, k, j))
                        throw InvalidStructure("CubicHamiltonian: C must be fully symmetric");
                }
    }

    static CubicHamiltonian zero(Eigen::Index n) {
        return CubicHamiltonian(std::vector<MatrixType>(static_cast<std::size_t>(n), MatrixType::Zero(n, n)),
                                MatrixType::Zero(n, n), VectorType::Zero(n), Scalar(0));
    }

    [[nodiscard]] Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(c_.size()); }
    [[nodiscard]] const std::vector<MatrixType>& cubic() const noexcept { return c_; }
    [[nodiscard]] const MatrixType& quadratic() const noexcept { return s_; }
    [[nodiscard]] const VectorType& linear() const noexcept { return l_; }
    [[nodiscard]] Scalar constant() const noexcept { return d_; }
    [[nodiscard]] Scalar coef(Eigen::Index i, Eigen::Index j, Eigen::Index k) const {
        return c_[static_cast<std::size_t>(i)](j, k);
    }

    [[nodiscard]] bool homogeneous_cubic() const {
        return s_.isZero(0) && l_.isZero(0) && d_ == Scalar(0);
    }

    /// C(x, y, z).
    [[nodiscard]] Scalar trilinear(const VectorType& x, const VectorType& y, const VectorType& z) const {
        Scalar acc(0);
        for (Eigen::Index i = 0; i < dim(); ++i) acc += x[i] * y.dot(c_[static_cast<std::size_t>(i)] * z);
        return acc;
    }

    template <typename NewScalar>
    [[nodiscard]] CubicHamiltonian<NewScalar> cast() const {
        std::vector<Matrix<NewScalar>> c;
        for (const auto& ci : c_) c.push_back(ci.template cast<NewScalar>());
        return CubicHamiltonian<NewScalar>(std::move(c), s_.template cast<NewScalar>(),
                                           l_.template cast<NewScalar>(), static_cast<NewScalar>(d_));
    }

private:
    std::vector<MatrixType> c_;
    MatrixType s_;
    VectorType l_;
    Scalar d_ = Scalar(0);
};

/// Accumulates monomial coefficients into the symmetric storage.
template <typename Scalar>
class CubicBuilder {
public:
    explicit CubicBuilder(Eigen::Index n)
        : n_(n), c_(static_cast<std::size_t>(n), Matrix<Scalar>::Zero(n, n)), s_(Matrix<Scalar>::Zero(n, n)),
          l_(Vector<Scalar>::Zero(n)) {}

    /// Adds coef * x_i x_j x_k, spreading it evenly over the distinct index permutations.
    CubicBuilder& cubic(std::array<Eigen::Index, 3> idx, Scalar coef) {
        for (auto i : idx)
            if (i < 0 || i >= n_) throw DimensionMismatch("CubicBuilder: monomial index out of range");
        std::array<std::array<Eigen::Index, 3>, 6> perms{{{idx[0], idx[1], idx[2]},
                                                          {idx[0], idx[2], idx[1]},
                                                          {idx[1], idx[0], idx[2]},
                                                          {idx[1], idx[2], idx[0]},
                                                          {idx[2], idx[0], idx[1]},
                                                          {idx[2], idx[1], idx[0]}}};
        std::vector<std::array<Eigen::Index, 3>> distinct;
        for (const auto& p : perms)
            if (std::find(distinct.begin(), distinct.end(), p) == distinct.end()) distinct.push_back(p);
        const Scalar share = coef / Scalar(distinct.size());
        for (const auto& p : distinct) c_[static_cast<std::size_t>(p[0])](p[1], p[2]) += share;
        return *this;
    }

    /// Adds coef * x_i x_j (with H_2 = x^T S x).
    CubicBuilder& quadratic(Eigen::Index i, Eigen::Index j, Scalar coef) {
        if (i == j) {
            s_(i, i) += coef;
        } else {
            s_(i, j) += coef / Scalar(2);
            s_(j, i) += coef / Scalar(2);
        }
        return *this;
    }

    CubicBuilder& quadratic_matrix(const Matrix<Scalar>& s) {
        s_ += Scalar(0.5) * (s + s.transpose());
        return *this;
    }

    CubicBuilder& linear(Eigen::Index i, Scalar coef) {
        l_[i] += coef;
        return *this;
    }

    CubicBuilder& constant(Scalar d) {
        d_ += d;
        return *this;
    }

    [[nodiscard]] CubicHamiltonian<Scalar> build() const { return CubicHamiltonian<Scalar>(c_, s_, l_, d_); }

private:
    Eigen::Index n_;
    std::vector<Matrix<Scalar>> c_;
    Matrix<Scalar> s_;
    Vector<Scalar> l_;
    Scalar d_ = Scalar(0);
};

template <typename Scalar>
struct CubicEvaluation {
    Scalar value;
    Vector<Scalar> gradient;
    Matrix<Scalar> hessian;
};

template <typename Scalar>
[[nodiscard]] Scalar value(const CubicHamiltonian<Scalar>& h, const Vector<Scalar>& x) {
    detail::require_dim(x.size(), h.dim(), "value");
    return h.trilinear(x, x, x) + x.dot(h.quadratic() * x) + h.linear().dot(x) + h.constant();
}

template <typename Scalar>
[[nodiscard]] Vector<Scalar> gradient(const CubicHamiltonian<Scalar>& h, const Vector<Scalar>& x) {
    detail::require_dim(x.size(), h.dim(), "gradient");
    Vector<Scalar> g(h.dim());
    for (Eigen::Index m = 0; m < h.dim(); ++m) g[m] = Scalar(3) * x.dot(h.cubic()[static_cast<std::size_t>(m)] * x);
    return g + Scalar(2) * h.quadratic() * x + h.linear();
}

template <typename Scalar>
[[nodiscard]] Matrix<Scalar> hessian(const CubicHamiltonian<Scalar>& h, const Vector<Scalar>& x) {
    detail::require_dim(x.size(), h.dim(), "hessian");
    const Eigen::Index n = h.dim();
    Matrix<Scalar> hess(n, n);
    for (Eigen::Index m = 0; m < n; ++m) hess.row(m) = Scalar(6) * (h.cubic()[static_cast<std::size_t>(m)] * x).transpose();
    return hess + Scalar(2) * h.quadratic();
}

template <typename Scalar>
[[nodiscard]] CubicEvaluation<Scalar> evaluate(const CubicHamiltonian<Scalar>& h, const Vector<Scalar>& x) {
    return {value(h, x), gradient(h, x), hessian(h, x)};
}

/// Constant antisymmetric K, with rank from singular values above 1e-10 sigma_max.
template <typename Scalar>
class PoissonStructure {
public:
    static constexpr double kRankTolerance = 1e-10;

    PoissonStructure() = default;

    explicit PoissonStructure(Matrix<Scalar> k) : k_(std::move(k)) {
        if (k_.rows() != k_.cols()) throw DimensionMismatch("PoissonStructure: K must be square");
        if (k_ != -k_.transpose()) throw InvalidStructure("PoissonStructure: K must be antisymmetric");
        rank_ = numerical_rank<Scalar>(k_, Scalar(kRankTolerance));
        if (rank_ % 2 != 0) throw InvalidStructure("PoissonStructure: numerical rank is odd");
    }

    /// [[0, I], [-I, 0]] on (q, p) blocks of size m, i.e. qdot = H_p, pdot = -H_q.
    static PoissonStructure canonical(Eigen::Index m) {
        Matrix<Scalar> k = Matrix<Scalar>::Zero(2 * m, 2 * m);
        k.topRightCorner(m, m).setIdentity();
        k.bottomLeftCorner(m, m) = -Matrix<Scalar>::Identity(m, m);
        return PoissonStructure(std::move(k));
    }

    [[nodiscard]] Eigen::Index dim() const noexcept { return k_.rows(); }
    [[nodiscard]] Eigen::Index rank() const noexcept { return rank_; }
    [[nodiscard]] const Matrix<Scalar>& matrix() const noexcept { return k_; }

    template <typename NewScalar>
    [[nodiscard]] PoissonStructure<NewScalar> cast() const {
        return PoissonStructure<NewScalar>(k_.template cast<NewScalar>());
    }

private:
    Matrix<Scalar> k_;
    Eigen::Index rank_ = 0;
};

/// Coefficients of f = K grad H: T_i = 3 sum_m K_im C_m, B = 2 K S, c = K l.
template <typename Scalar>
[[nodiscard]] QuadraticField<Scalar> hamiltonian_to_vf(const CubicHamiltonian<Scalar>& h,
                                                       const PoissonStructure<Scalar>& p) {
    detail::require_dim(p.dim(), h.dim(), "hamiltonian_to_vf");
    const Eigen::Index n = h.dim();
    const auto& k = p.matrix();
    std::vector<Matrix<Scalar>> t(static_cast<std::size_t>(n), Matrix<Scalar>::Zero(n, n));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index m = 0; m < n; ++m)
            if (k(i, m) != Scalar(0)) t[static_cast<std::size_t>(i)] += Scalar(3) * k(i, m) * h.cubic()[static_cast<std::size_t>(m)];
    return QuadraticField<Scalar>(std::move(t), Scalar(2) * k * h.quadratic(), k * h.linear());
}

/// H, K and the derived field f = K grad H, built once.
template <typename Scalar>
struct HamiltonianSystem {
    CubicHamiltonian<Scalar> hamiltonian;
    PoissonStructure<Scalar> poisson;
    QuadraticField<Scalar> field;

    HamiltonianSystem(CubicHamiltonian<Scalar> h, PoissonStructure<Scalar> p)
        : hamiltonian(std::move(h)), poisson(std::move(p)), field(hamiltonian_to_vf(hamiltonian, poisson)) {}

    [[nodiscard]] Eigen::Index dim() const noexcept { return hamiltonian.dim(); }
};

/// Homogeneous cubic Hbar(x0, x) with Hbar(1, x) = H(x), and K padded by a zero
/// leading row and column so that x0 is a linear integral.
template <typename Scalar>
[[nodiscard]] std::pair<CubicHamiltonian<Scalar>, PoissonStructure<Scalar>> homogenize(
    const CubicHamiltonian<Scalar>& h, const PoissonStructure<Scalar>& p) {
    detail::require_dim(p.dim(), h.dim(), "homogenize");
    const Eigen::Index n = h.dim();
    std::vector<Matrix<Scalar>> c(static_cast<std::size_t>(n + 1), Matrix<Scalar>::Zero(n + 1, n + 1));
    for (Eigen::Index i = 0; i < n; ++i)
        c[static_cast<std::size_t>(i + 1)].bottomRightCorner(n, n) = h.cubic()[static_cast<std::size_t>(i)];
    // Exactly one zero index: the three slots share x0 x^T S x.
    c[0].bottomRightCorner(n, n) = h.quadratic() / Scalar(3);
    for (Eigen::Index i = 0; i < n; ++i) {
        c[static_cast<std::size_t>(i + 1)].col(0).tail(n) += h.quadratic().row(i).transpose() / Scalar(3);
        c[static_cast<std::size_t>(i + 1)].row(0).tail(n) += h.quadratic().row(i) / Scalar(3);
    }
    // Exactly two zero indices: x0^2 l.x.
    for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar share = h.linear()[i] / Scalar(3);
        c[0](0, i + 1) += share;
        c[0](i + 1, 0) += share;
        c[static_cast<std::size_t>(i + 1)](0, 0) += share;
    }
    c[0](0, 0) = h.constant();
    Matrix<Scalar> kbar = Matrix<Scalar>::Zero(n + 1, n + 1);
    kbar.bottomRightCorner(n, n) = p.matrix();
    return {CubicHamiltonian<Scalar>(std::move(c), Matrix<Scalar>::Zero(n + 1, n + 1), Vector<Scalar>::Zero(n + 1),
                                     Scalar(0)),
            PoissonStructure<Scalar>(std::move(kbar))};
}

/// Orthonormal null-space basis of K as columns; each column v gives the linear Casimir v.x.
template <typename Scalar>
[[nodiscard]] Matrix<Scalar> casimir_basis(const PoissonStructure<Scalar>& p) {
    return null_space<Scalar>(p.matrix(), Scalar(PoissonStructure<Scalar>::kRankTolerance));
}

}  // namespace kahan
