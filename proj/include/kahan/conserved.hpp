#pragma once

// Conserved quantities of the Kahan map on cubic Hamiltonian systems
// f = K grad H: the modified Hamiltonian (two algebraic forms), the invariant
// measure densities of the family, and pointwise diagnostics for measure
// preservation, symplecticity and the rational degree bounds.

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "kahan/densela.hpp"
#include "kahan/errors.hpp"
#include "kahan/forms.hpp"
#include "kahan/integrators.hpp"

namespace kahan {

/// |det| below this is reported as the singular set on sampling grids.
inline constexpr double kSingularSetThreshold = 1e-9;

/// Htilde(x) = H(x) + (h/3) grad H(x)^T (I - h/2 f'(x))^{-1} f(x).
template <typename Scalar>
[[nodiscard]] Scalar modified_hamiltonian(const HamiltonianSystem<Scalar>& sys, const Vector<Scalar>& x, Scalar h) {
    const Vector<Scalar> g = gradient(sys.hamiltonian, x);
    const LuFactor<Scalar> lu(detail::half_step_matrix(sys.field, x, h));
    if (lu.singular()) throw SingularSet("modified_hamiltonian: x lies on the singular set");
    const Vector<Scalar> d = lu.solve(evaluate(sys.field, x));
    return value(sys.hamiltonian, x) + (h / Scalar(3)) * g.dot(d);
}

/// The same quantity written with h entering only as h^2:
/// H + (h^2/6) grad H^T (I - h^2/4 f'^2)^{-1} f' f.
template <typename Scalar>
[[nodiscard]] Scalar modified_hamiltonian_even(const HamiltonianSystem<Scalar>& sys, const Vector<Scalar>& x,
                                               Scalar h) {
    const Scalar h2 = h * h;
    const Vector<Scalar> g = gradient(sys.hamiltonian, x);
    const Matrix<Scalar> jx = jacobian(sys.field, x);
    const Matrix<Scalar> m = Matrix<Scalar>::Identity(x.size(), x.size()) - (h2 / Scalar(4)) * jx * jx;
    const LuFactor<Scalar> lu(m);
    if (lu.singular()) throw SingularSet("modified_hamiltonian_even: x lies on the singular set");
    const Vector<Scalar> d = lu.solve(jx * evaluate(sys.field, x));
    return value(sys.hamiltonian, x) + (h2 / Scalar(6)) * g.dot(d);
}

/// Htilde for grid sampling: nullopt where |det(I - h/2 f'(x))| < kSingularSetThreshold.
template <typename Scalar>
[[nodiscard]] std::optional<Scalar> try_modified_hamiltonian(const HamiltonianSystem<Scalar>& sys,
                                                             const Vector<Scalar>& x, Scalar h) {
    using std::abs;
    const Scalar det = determinant<Scalar>(detail::half_step_matrix(sys.field, x, h));
    if (abs(det) < Scalar(kSingularSetThreshold)) return std::nullopt;
    try {
        return modified_hamiltonian(sys, x, h);
    } catch (const SingularSet&) {
        return std::nullopt;
    }
}

/// Energy conserved to O(h^4) by the family member a:
///     H + h^2 (a/4 - 1/24) f^T Hess(H) f.
/// The h^2 coefficient of the modified field is (1/12) f'f'f + (a/4 - 1/24) f''(f,f);
/// along it the correction cancels the H drift at order h^2. For a = -1/2 this
/// is the h^2 truncation of Htilde, for a = 1/6 it is H itself.
template <typename Scalar>
[[nodiscard]] Scalar family_energy(Scalar a, const HamiltonianSystem<Scalar>& sys, const Vector<Scalar>& x, Scalar h) {
    const auto e = evaluate(sys.hamiltonian, x);
    const Vector<Scalar> f = sys.poisson.matrix() * e.gradient;
    return e.value + h * h * (a / Scalar(4) - Scalar(1) / Scalar(24)) * f.dot(e.hessian * f);
}

/// det(I - h/2 f'(x)).
template <typename Scalar>
[[nodiscard]] Scalar kahan_determinant(const QuadraticField<Scalar>& vf, const Vector<Scalar>& x, Scalar h) {
    return determinant<Scalar>(detail::half_step_matrix(vf, x, h));
}

/// Invariant density m(x) of the family member a in {-1/2, 0, 1/2}:
/// 1/det(I - h/2 f'(x)), 1, and det(I - h/2 f'(x)) respectively.
template <typename Scalar>
[[nodiscard]] Scalar measure_density(Scalar a, const QuadraticField<Scalar>& vf, const Vector<Scalar>& x, Scalar h) {
    using std::abs;
    if (a == Scalar(0)) return Scalar(1);
    if (a != Scalar(-0.5) && a != Scalar(0.5))
        throw UnsupportedParameter("measure_density: only a in {-1/2, 0, 1/2} carry an invariant density");
    const Scalar det = kahan_determinant(vf, x, h);
    if (a == Scalar(0.5)) return det;
    if (abs(det) < Scalar(kSingularSetThreshold)) throw SingularSet("measure_density: x lies on the singular set");
    return Scalar(1) / det;
}

/// max_k |m(x_{k+1}) det A_k / m(x_k) - 1| over consecutive states, with A_k
/// the closed-form step Jacobian. `density_parameter` picks m and defaults to a.
template <typename Scalar>
[[nodiscard]] Scalar measure_defect(Scalar a, const QuadraticField<Scalar>& vf, const std::vector<Vector<Scalar>>& states,
                                    Scalar h, std::optional<Scalar> density_parameter = std::nullopt) {
    using std::abs;
    const Scalar ad = density_parameter.value_or(a);
    Scalar worst = Scalar(0);
    for (std::size_t k = 0; k + 1 < states.size(); ++k) {
        const Matrix<Scalar> jac = step_jacobian(a, vf, states[k], states[k + 1], h);
        const Scalar ratio = measure_density(ad, vf, states[k + 1], h) * determinant<Scalar>(jac) /
                             measure_density(ad, vf, states[k], h);
        worst = std::max(worst, abs(ratio - Scalar(1)));
    }
    return worst;
}

template <typename Scalar>
[[nodiscard]] Matrix<Scalar> canonical_symplectic(Eigen::Index dim) {
    if (dim % 2 != 0) throw DimensionMismatch("canonical_symplectic: odd dimension");
    return PoissonStructure<Scalar>::canonical(dim / 2).matrix();
}

/// max-abs entry of A^T J A - J for the canonical J.
template <typename Scalar>
[[nodiscard]] Scalar symplectic_defect(const Matrix<Scalar>& a) {
    if (a.rows() != a.cols()) throw DimensionMismatch("symplectic_defect: matrix must be square");
    if (a.rows() % 2 != 0) throw DimensionMismatch("symplectic_defect: odd dimension");
    const Matrix<Scalar> j = canonical_symplectic<Scalar>(a.rows());
    return (a.transpose() * j * a - j).cwiseAbs().maxCoeff();
}

/// Polynomial pieces of Htilde and the Kahan map along x, written with the
/// adjugate so that no division by det(I - h/2 f'(x)) occurs.
template <typename Scalar>
struct KahanNumerators {
    Scalar denominator;          // det(I - h/2 f'(x))
    Scalar htilde_numerator;     // H det + (h/3) grad H^T adj(.) f
    Vector<Scalar> map_numerator;  // x det + h adj(.) f
};

template <typename Scalar>
[[nodiscard]] KahanNumerators<Scalar> kahan_numerators(const HamiltonianSystem<Scalar>& sys, const Vector<Scalar>& x,
                                                       Scalar h) {
    const Matrix<Scalar> m = detail::half_step_matrix(sys.field, x, h);
    const Matrix<Scalar> adj = adjugate<Scalar>(m);
    const Scalar det = determinant<Scalar>(m);
    const Vector<Scalar> adj_f = adj * evaluate(sys.field, x);
    return {det, value(sys.hamiltonian, x) * det + (h / Scalar(3)) * gradient(sys.hamiltonian, x).dot(adj_f),
            x * det + h * adj_f};
}

struct DegreeCheck {
    std::string name;
    int bound = 0;
    std::vector<int> observed;  // estimated degree on each sampled line
    bool holds = false;
};

struct DegreeBoundReport {
    long n = 0;
    long rank = 0;
    double h = 0.0;
    std::vector<DegreeCheck> checks;

    [[nodiscard]] bool all_hold() const {
        for (const auto& c : checks)
            if (!c.holds) return false;
        return true;
    }
};

/// Degree bounds on random affine lines x(t) = x0 + t v, t at Chebyshev points:
/// denominator <= k; Htilde numerator <= k+3 (k+1 when k = n); map numerator
/// <= k+1 (k when k = n). A bound holds only if it holds on every line.
template <typename Rng>
[[nodiscard]] DegreeBoundReport verify_degree_bounds(const HamiltonianSystem<double>& sys, double h, int lines,
                                                     Rng& rng) {
    if (h == 0.0) throw std::invalid_argument("verify_degree_bounds: h must be nonzero");
    const Eigen::Index n = sys.dim();
    const Eigen::Index k = sys.poisson.rank();
    const bool full = (k == n);

    DegreeBoundReport report;
    report.n = n;
    report.rank = k;
    report.h = h;
    report.checks = {{"denominator", static_cast<int>(k), {}, true},
                     {"htilde_numerator", static_cast<int>(full ? k + 1 : k + 3), {}, true},
                     {"map_numerator", static_cast<int>(full ? k : k + 1), {}, true}};

    std::normal_distribution<double> gauss(0.0, 1.0);
    int top_bound = 0;
    for (const auto& c : report.checks) top_bound = std::max(top_bound, c.bound);
    const auto ts = chebyshev_points(static_cast<std::size_t>(top_bound + 8));

    for (int line = 0; line < lines; ++line) {
        VectorXd x0(n), v(n);
        for (Eigen::Index i = 0; i < n; ++i) x0[i] = gauss(rng);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
        std::vector<double> den, num;
        std::vector<std::vector<double>> map(static_cast<std::size_t>(n));
        for (double t : ts) {
            const auto parts = kahan_numerators(sys, VectorXd(x0 + t * v), h);
            den.push_back(parts.denominator);
            num.push_back(parts.htilde_numerator);
            for (Eigen::Index i = 0; i < n; ++i) map[static_cast<std::size_t>(i)].push_back(parts.map_numerator[i]);
        }
        const auto record = [&](DegreeCheck& check, int degree) {
            check.observed.push_back(degree);
            if (degree > check.bound) check.holds = false;
        };
        record(report.checks[0], estimate_polynomial_degree(ts, den, report.checks[0].bound + 2));
        record(report.checks[1], estimate_polynomial_degree(ts, num, report.checks[1].bound + 2));
        int map_degree = 0;
        for (const auto& comp : map)
            map_degree = std::max(map_degree, estimate_polynomial_degree(ts, comp, report.checks[2].bound + 2));
        record(report.checks[2], map_degree);
    }
    return report;
}

struct QuantitySeries {
    std::string name;
    std::vector<double> values;
    double max_relative_drift = 0.0;
    double drift_slope = 0.0;  // per step, least-squares
};

struct ConservedReport {
    std::vector<QuantitySeries> series;

    [[nodiscard]] bool empty() const noexcept { return series.empty(); }

    [[nodiscard]] const QuantitySeries* find(const std::string& name) const {
        for (const auto& s : series)
            if (s.name == name) return &s;
        return nullptr;
    }
};

/// Max |v_k - v_0| relative to |v_0| (absolute when v_0 = 0).
[[nodiscard]] inline double max_relative_drift(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    const double ref = std::abs(values.front());
    double worst = 0.0;
    for (double v : values) worst = std::max(worst, std::abs(v - values.front()));
    return ref > 0.0 ? worst / ref : worst;
}

[[nodiscard]] inline QuantitySeries make_series(std::string name, std::vector<double> values,
                                                const std::vector<long>& steps) {
    QuantitySeries s{std::move(name), std::move(values), 0.0, 0.0};
    s.max_relative_drift = max_relative_drift(s.values);
    if (s.values.size() >= 2) {
        std::vector<double> ts(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(s.values.size()));
        s.drift_slope = fit_line(ts, s.values).slope;
    }
    return s;
}

/// Series and drift slopes for H, Htilde (both forms), each Casimir, and the
/// cumulative measure defect (stride-1 trajectories of a in {-1/2, 0, 1/2}).
[[nodiscard]] inline ConservedReport conserved_report(const HamiltonianSystem<double>& sys,
                                                      const Trajectory<double>& traj) {
    ConservedReport report;
    if (traj.states.empty()) return report;
    const double h = traj.h;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> hv, ht, hte;
    for (const auto& x : traj.states) {
        hv.push_back(value(sys.hamiltonian, x));
        const auto t = try_modified_hamiltonian(sys, x, h);
        ht.push_back(t.value_or(nan));
        try {
            hte.push_back(modified_hamiltonian_even(sys, x, h));
        } catch (const SingularSet&) {
            hte.push_back(nan);
        }
    }
    report.series.push_back(make_series("H", std::move(hv), traj.step_index));
    report.series.push_back(make_series("Htilde", std::move(ht), traj.step_index));
    report.series.push_back(make_series("Htilde_even", std::move(hte), traj.step_index));

    const MatrixXd cas = casimir_basis(sys.poisson);
    for (Eigen::Index j = 0; j < cas.cols(); ++j) {
        std::vector<double> cv;
        for (const auto& x : traj.states) cv.push_back(cas.col(j).dot(x));
        report.series.push_back(make_series("casimir_" + std::to_string(j + 1), std::move(cv), traj.step_index));
    }

    const auto a = traj.method.family_parameter();
    if (a && traj.stride == 1 && (*a == -0.5 || *a == 0.0 || *a == 0.5)) {
        std::vector<double> cumulative{0.0};
        double worst = 0.0;
        try {
            for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
                const std::vector<VectorXd> pair{traj.states[k], traj.states[k + 1]};
                worst = std::max(worst, measure_defect(*a, sys.field, pair, h));
                cumulative.push_back(worst);
            }
        } catch (const std::exception&) {
            cumulative.resize(traj.states.size(), nan);
        }
        report.series.push_back(make_series("measure_defect", std::move(cumulative), traj.step_index));
    }
    return report;
}

}  // namespace kahan
