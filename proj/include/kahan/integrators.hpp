#pragma once

// One-step maps on quadratic vector fields: the Kahan step (polarized and
// Rosenbrock forms), the symmetric family
//     (x' - x)/h = a f(x) + (1 - 2a) f((x + x')/2) + a f(x'),
// Suzuki's composition of Kahan steps, closed-form step Jacobians, and the
// trajectory runner.
//
// For reference, the Kahan step is the a = -1/2 member; on quadratic fields it
// is also the explicit 3-stage Runge-Kutta method with tableau
//     0   |  0     0    0
//     1/2 | -1/4   1   -1/4
//     1   | -1/2   2   -1/2
//     ----+----------------
//         | -1/2   2   -1/2
// which is not used as an execution path here.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kahan/densela.hpp"
#include "kahan/errors.hpp"
#include "kahan/forms.hpp"
#include "kahan/reference_flow.hpp"

namespace kahan {

enum class MethodKind { Kahan, Family, SuzukiKahan, Reference };

struct MethodId {
    MethodKind kind = MethodKind::Kahan;
    double a = -0.5;     // Family parameter
    double tol = 1e-12;  // Reference tolerance

    static MethodId kahan() { return {MethodKind::Kahan, -0.5, 0.0}; }
    static MethodId family(double a) { return {MethodKind::Family, a, 0.0}; }
    static MethodId midpoint() { return family(0.0); }
    static MethodId trapezoidal() { return family(0.5); }
    static MethodId simpson() { return family(1.0 / 6.0); }
    static MethodId suzuki_kahan() { return {MethodKind::SuzukiKahan, -0.5, 0.0}; }
    static MethodId reference(double tol) { return {MethodKind::Reference, 0.0, tol}; }

    /// Family parameter whose invariant-measure theory applies, if any.
    [[nodiscard]] std::optional<double> family_parameter() const {
        if (kind == MethodKind::Kahan) return -0.5;
        if (kind == MethodKind::Family) return a;
        return std::nullopt;
    }

    [[nodiscard]] std::string name() const {
        switch (kind) {
            case MethodKind::Kahan: return "kahan";
            case MethodKind::Family: return "family:" + std::to_string(a);
            case MethodKind::SuzukiKahan: return "suzuki";
            case MethodKind::Reference: return "reference";
        }
        return "unknown";
    }
};

template <typename Scalar>
struct StepResult {
    Vector<Scalar> x_next;
    Scalar residual = Scalar(0);       // inf-norm of the defining equation at x_next
    int iterations = 0;                // Newton iterations (0 for linearly implicit steps)
    Scalar linear_det = Scalar(1);     // det(I - h/2 f'(x))
};

struct NewtonOptions {
    double tolerance = 1e-13;  // residual <= tolerance * (1 + |x|_inf)
    int max_iterations = 50;
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> half_step_matrix(const QuadraticField<Scalar>& vf, const Vector<Scalar>& x, Scalar h) {
    return Matrix<Scalar>::Identity(vf.dim(), vf.dim()) - (h / Scalar(2)) * jacobian(vf, x);
}

template <typename Scalar>
Vector<Scalar> family_residual(Scalar a, const QuadraticField<Scalar>& vf, const Vector<Scalar>& x,
                               const Vector<Scalar>& fx, const Vector<Scalar>& y, Scalar h) {
    const Vector<Scalar> mid = Scalar(0.5) * (x + y);
    return y - x - h * (a * fx + (Scalar(1) - Scalar(2) * a) * evaluate(vf, mid) + a * evaluate(vf, y));
}

template <typename Scalar>
Vector<Scalar> kahan_defining_residual(const QuadraticField<Scalar>& vf, const Vector<Scalar>& x,
                                       const Vector<Scalar>& y, Scalar h) {
    return y - x - h * (polarize(vf, x, y) + Scalar(0.5) * vf.linear_part() * (x + y) + vf.constant_part());
}

}  // namespace detail

/// Kahan step from its polarized definition
///     (x' - x)/h = Q(x, x') + B (x + x')/2 + c,
/// assembled as one linear system (I - h M(x) - h/2 B) x' = (I + h/2 B) x + h c.
template <typename Scalar>
[[nodiscard]] StepResult<Scalar> kahan_step(const QuadraticField<Scalar>& vf, const Vector<Scalar>& x, Scalar h) {
    detail::require_dim(x.size(), vf.dim(), "kahan_step");
    const Eigen::Index n = vf.dim();
    const Matrix<Scalar> id = Matrix<Scalar>::Identity(n, n);
    const Matrix<Scalar> lhs = id - h * vf.contract(x) - (h / Scalar(2)) * vf.linear_part();
    const Vector<Scalar> rhs = (id + (h / Scalar(2)) * vf.linear_part()) * x + h * vf.constant_part();
    const LuFactor<Scalar> lu(lhs);
    if (lu.singular()) throw SingularStep("kahan_step: x lies on the singular set");
    StepResult<Scalar> out;
    out.x_next = lu.solve(rhs);
    out.linear_det = lu.determinant();
    out.residual = detail::kahan_defining_residual(vf, x, out.x_next, h).cwiseAbs().maxCoeff();
    return out;
}

/// Kahan step in Rosenbrock form x' = x + h (I - h/2 f'(x))^{-1} f(x).
template <typename Scalar>
[[nodiscard]] StepResult<Scalar> kahan_step_rosenbrock(const QuadraticField<Scalar>& vf, const Vector<Scalar>& x,
                                                       Scalar h) {
    detail::require_dim(x.size(), vf.dim(), "kahan_step_rosenbrock");
    const LuFactor<Scalar> lu(detail::half_step_matrix(vf, x, h));
    if (lu.singular()) throw SingularStep("kahan_step_rosenbrock: x lies on the singular set");
    StepResult<Scalar> out;
    out.x_next = x + h * Vector<Scalar>(lu.solve(evaluate(vf, x)));
    out.linear_det = lu.determinant();
    out.residual = detail::kahan_defining_residual(vf, x, out.x_next, h).cwiseAbs().maxCoeff();
    return out;
}

/// Residual of the adjoint Rosenbrock form, x' - x - h (I + h/2 f'(x'))^{-1} f(x').
/// Vanishes on Kahan step pairs.
template <typename Scalar>
[[nodiscard]] Vector<Scalar> rosenbrock_adjoint_residual(const QuadraticField<Scalar>& vf, const Vector<Scalar>& x,
                                                         const Vector<Scalar>& x_next, Scalar h) {
    const Vector<Scalar> d = solve<Scalar>(detail::half_step_matrix(vf, x_next, -h), evaluate(vf, x_next));
    return x_next - x - h * d;
}

/// One step of the symmetric family, solved by Newton's method with the exact
/// residual Jacobian I - h ((1-2a)/2 f'((x+y)/2) + a f'(y)).
///
/// After the residual tolerance is met one more correction is applied, which
/// for a quadratic residual brings the iterate to rounding level.
template <typename Scalar>
[[nodiscard]] StepResult<Scalar> family_step(Scalar a, const QuadraticField<Scalar>& vf, const Vector<Scalar>& x,
                                             Scalar h, NewtonOptions opts = {}) {
    using std::abs;
    detail::require_dim(x.size(), vf.dim(), "family_step");
    const Eigen::Index n = vf.dim();
    const Matrix<Scalar> id = Matrix<Scalar>::Identity(n, n);
    const Vector<Scalar> fx = evaluate(vf, x);
    const Scalar tol = Scalar(opts.tolerance) * (Scalar(1) + x.cwiseAbs().maxCoeff());
    const Scalar wmid = (Scalar(1) - Scalar(2) * a) / Scalar(2);

    StepResult<Scalar> out;
    out.linear_det = determinant<Scalar>(detail::half_step_matrix(vf, x, h));
    Vector<Scalar> y = x + h * fx;
    Vector<Scalar> r = detail::family_residual(a, vf, x, fx, y, h);
    bool polished = false;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        const Scalar rnorm = r.cwiseAbs().maxCoeff();
        if (!std::isfinite(static_cast<double>(rnorm))) break;
        if (rnorm <= tol && polished) break;
        const bool converged = rnorm <= tol;
        const Matrix<Scalar> jac =
            id - h * (wmid * jacobian(vf, Vector<Scalar>(Scalar(0.5) * (x + y))) + a * jacobian(vf, y));
        const LuFactor<Scalar> lu(jac);
        if (lu.singular()) throw SingularStep("family_step: Newton matrix is singular");
        y -= lu.solve(r);
        r = detail::family_residual(a, vf, x, fx, y, h);
        out.iterations = it;
        if (converged) polished = true;
    }
    const Scalar rnorm = r.cwiseAbs().maxCoeff();
    if (!(rnorm <= tol)) throw NoConvergence("family_step: Newton iteration did not converge");
    out.x_next = std::move(y);
    out.residual = rnorm;
    return out;
}

/// Jacobian dx'/dx of a family step, closed form:
///     (I - (1/4 + a/2) h f'(x') - (1/4 - a/2) h f'(x))^{-1}
///     (I + (1/4 + a/2) h f'(x) + (1/4 - a/2) h f'(x')).
template <typename Scalar>
[[nodiscard]] Matrix<Scalar> step_jacobian(Scalar a, const QuadraticField<Scalar>& vf, const Vector<Scalar>& x,
                                           const Vector<Scalar>& x_next, Scalar h) {
    const Eigen::Index n = vf.dim();
    const Matrix<Scalar> id = Matrix<Scalar>::Identity(n, n);
    const Scalar alpha = Scalar(0.25) + a / Scalar(2);
    const Scalar beta = Scalar(0.25) - a / Scalar(2);
    const Matrix<Scalar> jx = jacobian(vf, x);
    const Matrix<Scalar> jy = jacobian(vf, x_next);
    const LuFactor<Scalar> lu(id - alpha * h * jy - beta * h * jx);
    if (lu.singular()) throw SingularStep("step_jacobian: singular left factor");
    return lu.solve(id + alpha * h * jx + beta * h * jy);
}

template <typename Scalar>
struct SuzukiCoefficients {
    static Scalar outer() { return Scalar(1) / (Scalar(2) - std::cbrt(Scalar(2))); }
    static Scalar inner() { return Scalar(1) - Scalar(2) * outer(); }
};

/// Kahan steps of sizes g1 h, g2 h, g1 h with g1 = 1/(2 - 2^{1/3}), g2 = 1 - 2 g1.
template <typename Scalar>
[[nodiscard]] StepResult<Scalar> suzuki_kahan_step(const QuadraticField<Scalar>& vf, const Vector<Scalar>& x,
                                                   Scalar h) {
    const Scalar g1 = SuzukiCoefficients<Scalar>::outer();
    const Scalar g2 = SuzukiCoefficients<Scalar>::inner();
    StepResult<Scalar> first = kahan_step(vf, x, g1 * h);
    StepResult<Scalar> second = kahan_step(vf, first.x_next, g2 * h);
    StepResult<Scalar> third = kahan_step(vf, second.x_next, g1 * h);
    third.linear_det = first.linear_det;
    third.residual = std::max({first.residual, second.residual, third.residual});
    return third;
}

/// Dispatches one step of the given method.
template <typename Scalar>
[[nodiscard]] StepResult<Scalar> step(const MethodId& method, const QuadraticField<Scalar>& vf,
                                      const Vector<Scalar>& x, Scalar h) {
    switch (method.kind) {
        case MethodKind::Kahan: return kahan_step(vf, x, h);
        case MethodKind::Family: return family_step(Scalar(method.a), vf, x, h);
        case MethodKind::SuzukiKahan: return suzuki_kahan_step(vf, x, h);
        case MethodKind::Reference: {
            StepResult<Scalar> out;
            out.x_next = reference_flow(vf, x, h, Scalar(method.tol));
            return out;
        }
    }
    throw std::invalid_argument("step: unknown method");
}

/// The h^2 coefficient of the modified vector field,
/// (1/12)(-2 f''(f, f) + f' f' f), evaluated at x.
template <typename Scalar>
[[nodiscard]] Vector<Scalar> modified_vf_h2_term(const QuadraticField<Scalar>& vf, const Vector<Scalar>& x) {
    const Vector<Scalar> fx = evaluate(vf, x);
    const Matrix<Scalar> jx = jacobian(vf, x);
    return (Scalar(-2) * second_derivative(vf, fx, fx) + jx * (jx * fx)) / Scalar(12);
}

template <typename Scalar>
struct Observer {
    std::string name;
    std::function<Scalar(const Vector<Scalar>&)> fn;
};

enum class Truncation { None, SingularStep, Diverged, NoConvergence };

[[nodiscard]] inline const char* to_string(Truncation t) {
    switch (t) {
        case Truncation::None: return "none";
        case Truncation::SingularStep: return "singular";
        case Truncation::Diverged: return "diverged";
        case Truncation::NoConvergence: return "no_convergence";
    }
    return "unknown";
}

template <typename Scalar>
struct Trajectory {
    MethodId method;
    Scalar h = Scalar(0);
    long stride = 1;
    long steps_completed = 0;
    Truncation truncation = Truncation::None;
    std::vector<long> step_index;               // step number of each recorded state
    std::vector<Vector<Scalar>> states;         // recorded states, states[0] = x0
    std::vector<std::string> column_names;      // observer names
    std::vector<std::vector<Scalar>> columns;   // columns[j][r] = observer j at states[r]

    [[nodiscard]] bool truncated() const noexcept { return truncation != Truncation::None; }

    [[nodiscard]] const std::vector<Scalar>* column(const std::string& name) const {
        for (std::size_t j = 0; j < column_names.size(); ++j)
            if (column_names[j] == name) return &columns[j];
        return nullptr;
    }
};

struct IterateOptions {
    long stride = 0;                 // 0 selects the default: 1, or 10 when N >= 1e6
    double divergence_bound = 1e12;  // |x|_inf above this truncates the run
};

/// Runs N steps from x0, recording states and observer columns every `stride`
/// steps (and always the final state). Step failures truncate the run instead
/// of propagating.
template <typename Scalar>
[[nodiscard]] Trajectory<Scalar> iterate(const MethodId& method, const QuadraticField<Scalar>& vf,
                                         const Vector<Scalar>& x0, Scalar h, long steps,
                                         const std::vector<Observer<Scalar>>& observers = {},
                                         IterateOptions opts = {}) {
    detail::require_dim(x0.size(), vf.dim(), "iterate");
    if (steps < 0) throw std::invalid_argument("iterate: negative step count");
    Trajectory<Scalar> traj;
    traj.method = method;
    traj.h = h;
    traj.stride = opts.stride > 0 ? opts.stride : (steps >= 1000000 ? 10 : 1);
    for (const auto& obs : observers) traj.column_names.push_back(obs.name);
    traj.columns.resize(observers.size());

    const auto record = [&](long k, const Vector<Scalar>& x) {
        traj.step_index.push_back(k);
        traj.states.push_back(x);
        for (std::size_t j = 0; j < observers.size(); ++j) traj.columns[j].push_back(observers[j].fn(x));
    };

    Vector<Scalar> x = x0;
    record(0, x);
    for (long k = 1; k <= steps; ++k) {
        try {
            x = step(method, vf, x, h).x_next;
        } catch (const SingularStep&) {
            traj.truncation = Truncation::SingularStep;
        } catch (const SingularMatrix&) {
            traj.truncation = Truncation::SingularStep;
        } catch (const NoConvergence&) {
            traj.truncation = Truncation::NoConvergence;
        } catch (const StepSizeUnderflow&) {
            traj.truncation = Truncation::Diverged;
        }
        if (!traj.truncated() && (!x.allFinite() || x.cwiseAbs().maxCoeff() > Scalar(opts.divergence_bound)))
            traj.truncation = Truncation::Diverged;
        if (traj.truncated()) break;
        traj.steps_completed = k;
        if (k % traj.stride == 0 || k == steps) record(k, x);
    }
    return traj;
}

}  // namespace kahan
