#pragma once

// High-accuracy reference flow: Dormand-Prince 8(5,3) with the Hairer-Wanner
// error estimator and step-size control. Used as the "exact" solution in
// order and local-error tests.

#include <algorithm>
#include <cmath>
#include <limits>

#include "kahan/densela.hpp"
#include "kahan/errors.hpp"
#include "kahan/forms.hpp"

namespace kahan {

struct ReferenceFlowStats {
    long accepted = 0;
    long rejected = 0;
};

namespace detail {

// Dormand-Prince 8(5,3) coefficients, Hairer-Norsett-Wanner (1993).
struct Dop853 {
    static constexpr double c2 = 0.526001519587677318785587544488E-01, c3 = 0.789002279381515978178381316732E-01,
                            c4 = 0.118350341907227396726757197510E+00, c5 = 0.281649658092772603273242802490E+00,
                            c6 = 0.333333333333333333333333333333E+00, c7 = 0.25E+00,
                            c8 = 0.307692307692307692307692307692E+00, c9 = 0.651282051282051282051282051282E+00,
                            c10 = 0.6E+00, c11 = 0.857142857142857142857142857142E+00;
    static constexpr double b1 = 5.42937341165687622380535766363E-2, b6 = 4.45031289275240888144113950566E0,
                            b7 = 1.89151789931450038304281599044E0, b8 = -5.8012039600105847814672114227E0,
                            b9 = 3.1116436695781989440891606237E-1, b10 = -1.52160949662516078556178806805E-1,
                            b11 = 2.01365400804030348374776537501E-1, b12 = 4.47106157277725905176885569043E-2;
    static constexpr double bhh1 = 0.244094488188976377952755905512E+00, bhh2 = 0.733846688281611857341361741547E+00,
                            bhh3 = 0.220588235294117647058823529412E-01;
    static constexpr double er1 = 0.1312004499419488073250102996E-01, er6 = -0.1225156446376204440720569753E+01,
                            er7 = -0.4957589496572501915214079952E+00, er8 = 0.1664377182454986536961530415E+01,
                            er9 = -0.3503288487499736816886487290E+00, er10 = 0.3341791187130174790297318841E+00,
                            er11 = 0.8192320648511571246570742613E-01, er12 = -0.2235530786388629525884427845E-01;
    static constexpr double a21 = 5.26001519587677318785587544488E-2, a31 = 1.97250569845378994544595329183E-2,
                            a32 = 5.91751709536136983633785987549E-2, a41 = 2.95875854768068491816892993775E-2,
                            a43 = 8.87627564304205475450678981324E-2, a51 = 2.41365134159266685502369798665E-1,
                            a53 = -8.84549479328286085344864962717E-1, a54 = 9.24834003261792003115737966543E-1,
                            a61 = 3.7037037037037037037037037037E-2, a64 = 1.70828608729473871279604482173E-1,
                            a65 = 1.25467687566822425016691814123E-1, a71 = 3.7109375E-2,
                            a74 = 1.70252211019544039314978060272E-1, a75 = 6.02165389804559606850219397283E-2,
                            a76 = -1.7578125E-2, a81 = 3.70920001185047927108779319836E-2,
                            a84 = 1.70383925712239993810214054705E-1, a85 = 1.07262030446373284651809199168E-1,
                            a86 = -1.53194377486244017527936158236E-2, a87 = 8.27378916381402288758473766002E-3,
                            a91 = 6.24110958716075717114429577812E-1, a94 = -3.36089262944694129406857109825E0,
                            a95 = -8.68219346841726006818189891453E-1, a96 = 2.75920996994467083049415600797E1,
                            a97 = 2.01540675504778934086186788979E1, a98 = -4.34898841810699588477366255144E1,
                            a101 = 4.77662536438264365890433908527E-1, a104 = -2.48811461997166764192642586468E0,
                            a105 = -5.90290826836842996371446475743E-1, a106 = 2.12300514481811942347288949897E1,
                            a107 = 1.52792336328824235832596922938E1, a108 = -3.32882109689848629194453265587E1,
                            a109 = -2.03312017085086261358222928593E-2, a111 = -9.3714243008598732571704021658E-1,
                            a114 = 5.18637242884406370830023853209E0, a115 = 1.09143734899672957818500254654E0,
                            a116 = -8.14978701074692612513997267357E0, a117 = -1.85200656599969598641566180701E1,
                            a118 = 2.27394870993505042818970056734E1, a119 = 2.49360555267965238987089396762E0,
                            a1110 = -3.0467644718982195003823669022E0, a121 = 2.27331014751653820792359768449E0,
                            a124 = -1.05344954667372501984066689879E1, a125 = -2.00087205822486249909675718444E0,
                            a126 = -1.79589318631187989172765950534E1, a127 = 2.79488845294199600508499808837E1,
                            a128 = -2.85899827713502369474065508674E0, a129 = -8.87285693353062954433549289258E0,
                            a1210 = 1.23605671757943030647266201528E1, a1211 = 6.43392746015763530355970484046E-1;
};

}  // namespace detail

/// Approximates the time-t flow of vf from x with local error control at tol.
///
/// Global accuracy is roughly 100 tol over t = O(1). Negative t integrates
/// backwards. Throws StepSizeUnderflow when the step collapses (finite-time
/// blow-up of the quadratic ODE, typically).
template <typename Scalar>
[[nodiscard]] Vector<Scalar> reference_flow(const QuadraticField<Scalar>& vf, const Vector<Scalar>& x, Scalar t,
                                            Scalar tol, ReferenceFlowStats* stats = nullptr) {
    using D = detail::Dop853;
    using std::abs;
    using std::pow;
    using std::sqrt;
    detail::require_dim(x.size(), vf.dim(), "reference_flow");
    if (!(tol >= Scalar(1e-13))) throw std::invalid_argument("reference_flow: tol must be >= 1e-13");
    Vector<Scalar> y = x;
    if (t == Scalar(0)) return y;

    const Scalar dir = t > 0 ? Scalar(1) : Scalar(-1);
    const Scalar span = abs(t);
    const Eigen::Index n = x.size();
    const auto f = [&vf](const Vector<Scalar>& z) { return evaluate(vf, z); };

    Vector<Scalar> k1 = f(y), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), k8(n), k9(n), k10(n);
    // Initial step from the derivative magnitude, capped by the span.
    const Scalar scale0 = tol * (Scalar(1) + y.cwiseAbs().maxCoeff());
    const Scalar d1 = k1.cwiseAbs().maxCoeff();
    Scalar h = d1 > 0 ? std::min(span, Scalar(0.5) * pow(scale0 / d1, Scalar(1) / Scalar(8)))
                      : span;
    h = std::max(h, Scalar(1e-6) * span);
    Scalar elapsed = 0;
    long accepted = 0, rejected = 0;

    while (elapsed < span) {
        bool last = false;
        if (elapsed + Scalar(1.01) * h >= span) {
            h = span - elapsed;
            last = true;
        }
        if (Scalar(0.1) * h <= abs(elapsed) * std::numeric_limits<Scalar>::epsilon() || h <= 0)
            throw StepSizeUnderflow("reference_flow: step size underflow");
        const Scalar s = dir * h;
        k2 = f(y + s * D::a21 * k1);
        k3 = f(y + s * (D::a31 * k1 + D::a32 * k2));
        k4 = f(y + s * (D::a41 * k1 + D::a43 * k3));
        k5 = f(y + s * (D::a51 * k1 + D::a53 * k3 + D::a54 * k4));
        k6 = f(y + s * (D::a61 * k1 + D::a64 * k4 + D::a65 * k5));
        k7 = f(y + s * (D::a71 * k1 + D::a74 * k4 + D::a75 * k5 + D::a76 * k6));
        k8 = f(y + s * (D::a81 * k1 + D::a84 * k4 + D::a85 * k5 + D::a86 * k6 + D::a87 * k7));
        k9 = f(y + s * (D::a91 * k1 + D::a94 * k4 + D::a95 * k5 + D::a96 * k6 + D::a97 * k7 + D::a98 * k8));
        k10 = f(y + s * (D::a101 * k1 + D::a104 * k4 + D::a105 * k5 + D::a106 * k6 + D::a107 * k7 +
                         D::a108 * k8 + D::a109 * k9));
        const Vector<Scalar> k11 = f(y + s * (D::a111 * k1 + D::a114 * k4 + D::a115 * k5 + D::a116 * k6 +
                                             D::a117 * k7 + D::a118 * k8 + D::a119 * k9 + D::a1110 * k10));
        const Vector<Scalar> k12 = f(y + s * (D::a121 * k1 + D::a124 * k4 + D::a125 * k5 + D::a126 * k6 +
                                             D::a127 * k7 + D::a128 * k8 + D::a129 * k9 + D::a1210 * k10 +
                                             D::a1211 * k11));
        const Vector<Scalar> incr = D::b1 * k1 + D::b6 * k6 + D::b7 * k7 + D::b8 * k8 + D::b9 * k9 +
                                    D::b10 * k10 + D::b11 * k11 + D::b12 * k12;
        const Vector<Scalar> ynew = y + s * incr;

        Scalar err = 0, err2 = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Scalar sk = Scalar(1) / (tol + tol * std::max(abs(y[i]), abs(ynew[i])));
            const Scalar e2 = (incr[i] - D::bhh1 * k1[i] - D::bhh2 * k9[i] - D::bhh3 * k12[i]) * sk;
            const Scalar e1 = (D::er1 * k1[i] + D::er6 * k6[i] + D::er7 * k7[i] + D::er8 * k8[i] + D::er9 * k9[i] +
                               D::er10 * k10[i] + D::er11 * k11[i] + D::er12 * k12[i]) *
                              sk;
            err += e1 * e1;
            err2 += e2 * e2;
        }
        Scalar deno = err + Scalar(0.01) * err2;
        if (deno <= 0) deno = Scalar(1);
        err = h * err * sqrt(Scalar(1) / (deno * Scalar(n)));
        if (!std::isfinite(static_cast<double>(err))) err = Scalar(1e10);

        Scalar fac = pow(err, Scalar(1) / Scalar(8)) / Scalar(0.9);
        fac = std::clamp(fac, Scalar(1) / Scalar(6), Scalar(1) / Scalar(0.333));
        Scalar hnew = h / fac;
        if (err <= Scalar(1)) {
            ++accepted;
            y = ynew;
            elapsed = last ? span : elapsed + h;
            k1 = f(y);
            if (!y.allFinite()) throw StepSizeUnderflow("reference_flow: solution blew up");
        } else {
            ++rejected;
            hnew = h / std::min(Scalar(1) / Scalar(0.333), pow(err, Scalar(1) / Scalar(8)) / Scalar(0.9));
        }
        h = hnew;
    }
    if (stats) {
        stats->accepted = accepted;
        stats->rejected = rejected;
    }
    return y;
}

}  // namespace kahan
