#include <cmath>
#include <stdexcept>

#include "kahan/experiments.hpp"

namespace kahan {

namespace {

VectorXd vec(std::initializer_list<double> xs) {
    VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

SystemSpec hamiltonian_spec(std::string name, std::string notes, long n, std::vector<CubicMonomial> cubic,
                            MatrixXd quadratic, VectorXd linear, MatrixXd poisson) {
    SystemSpec s;
    s.name = std::move(name);
    s.notes = std::move(notes);
    s.n = n;
    s.hamiltonian = HamiltonianData{std::move(cubic), std::move(quadratic), std::move(linear), 0.0, std::move(poisson)};
    s.validate();
    return s;
}

MatrixXd cyclic_k() {
    MatrixXd k(3, 3);
    k << 0, 1, -1, -1, 0, 1, 1, -1, 0;
    return k;
}

CatalogEntry henon_heiles() {
    MatrixXd s = MatrixXd::Zero(2, 2);
    s(0, 0) = s(1, 1) = 0.5;
    CatalogEntry e;
    e.spec = hamiltonian_spec("henon_heiles", "H = (q^2+p^2)/2 + q^2 p - p^3/3, canonical (q, p)", 2,
                              {{{0, 0, 1}, 1.0}, {{1, 1, 1}, -1.0 / 3.0}}, s, VectorXd::Zero(2),
                              PoissonStructure<double>::canonical(1).matrix());
    e.recommended_h = {1.0 / 3.0, 2.0 / 3.0};
    e.x0 = vec({0.1, 0.1});
    for (double r : {0.1, 0.2, 0.3, 0.4, 0.5}) e.portrait_inits.push_back(vec({r, 0.0}));
    e.provenance = "Henon-Heiles type potential with 3-fold symmetry; bounded orbits for H < 1/6";
    return e;
}

CatalogEntry nonsym() {
    MatrixXd s = MatrixXd::Zero(2, 2);
    s(0, 0) = 1.0;
    CatalogEntry e;
    e.spec = hamiltonian_spec("nonsym", "H = p - p^3 + q^2 - q^3, canonical (q, p)", 2,
                              {{{0, 0, 0}, -1.0}, {{1, 1, 1}, -1.0}}, s, vec({0.0, 1.0}),
                              PoissonStructure<double>::canonical(1).matrix());
    e.recommended_h = {0.3, 0.2};
    e.x0 = vec({0.323, 1.0 / std::sqrt(3.0)});
    for (double q : {0.1, 0.2, 0.323, 0.45, 0.55}) e.portrait_inits.push_back(vec({q, 1.0 / std::sqrt(3.0)}));
    e.provenance =
        "bounded nonsymmetric orbits; elliptic fixed point (2/3, 1/sqrt 3), separatrix through (0, 1/sqrt 3)";
    return e;
}

CatalogEntry volterra() {
    CatalogEntry e;
    e.spec = hamiltonian_spec("volterra", "Volterra chain in R^3: H = x1 x2 x3, K cyclic, Casimir x1+x2+x3", 3,
                              {{{0, 1, 2}, 1.0}}, MatrixXd::Zero(3, 3), VectorXd::Zero(3), cyclic_k());
    e.recommended_h = {0.1, 1.0 / 3.0, 2.0 / 3.0};
    e.x0 = vec({1.0, 0.5, 0.3});
    e.portrait_inits = {e.x0};
    e.provenance = "xdot_i = x_i (x_{i-1} - x_{i+1}); positive orbits are bounded";
    return e;
}

CatalogEntry dressing() {
    // (x1+x2)(x2+x3)(x3+x1) = sum_{i != j} x_i^2 x_j + 2 x1 x2 x3, minus sum alpha_i x_i.
    const double alpha = 1.0;
    CatalogEntry e;
    e.spec = hamiltonian_spec(
        "dressing",
        "Dressing chain in R^3: H = (x1+x2)(x2+x3)(x3+x1) - sum alpha_i x_i, alpha = (1,1,1), K cyclic", 3,
        {{{0, 0, 1}, 1.0},
         {{0, 0, 2}, 1.0},
         {{0, 1, 1}, 1.0},
         {{1, 1, 2}, 1.0},
         {{0, 2, 2}, 1.0},
         {{1, 2, 2}, 1.0},
         {{0, 1, 2}, 2.0}},
        MatrixXd::Zero(3, 3), VectorXd::Constant(3, -alpha), cyclic_k());
    e.recommended_h = {0.1, 1.0 / 3.0, 2.0 / 3.0};
    e.x0 = vec({0.3, -0.1, 0.2});
    e.portrait_inits = {e.x0};
    e.provenance = "constant cyclic bracket {x_i, x_{i+1}} = 1; linear Casimir x1+x2+x3";
    return e;
}

CatalogEntry three_wave() {
    // z_j = x_j + i y_j, coordinates (x1, x2, x3, y1, y2, y3):
    // z1 z2 z3 + conj = 2 (x1 x2 x3 - x1 y2 y3 - y1 x2 y3 - y1 y2 x3).
    CatalogEntry e;
    e.spec = hamiltonian_spec(
        "three_wave",
        "three-wave system in C^3: H = z1 z2 z3 + conj(z1 z2 z3), z_j = x_j + i y_j, coordinates "
        "(x1,x2,x3,y1,y2,y3), K = [[0,I],[-I,0]] (x_j, y_j conjugate pairs)",
        6, {{{0, 1, 2}, 2.0}, {{0, 4, 5}, -2.0}, {{1, 3, 5}, -2.0}, {{2, 3, 4}, -2.0}}, MatrixXd::Zero(6, 6),
        VectorXd::Zero(6), PoissonStructure<double>::canonical(3).matrix());
    e.recommended_h = {0.1, 1.0 / 3.0, 2.0 / 3.0};
    e.x0 = vec({0.3, 0.2, 0.1, 0.1, -0.2, 0.25});
    e.portrait_inits = {e.x0};
    e.provenance =
        "cubic Hamiltonian in R^6 with invertible K; the flow is explosive (every non-equilibrium orbit escapes "
        "in finite time), so discrete orbits repeatedly pass close to the singular set and long-run Htilde "
        "checks are rounding-limited after the first such passage";
    return e;
}

}  // namespace

std::vector<CatalogEntry> catalog() { return {henon_heiles(), nonsym(), volterra(), dressing(), three_wave()}; }

CatalogEntry catalog_entry(const std::string& name) {
    for (auto& e : catalog())
        if (e.spec.name == name) return e;
    throw std::out_of_range("unknown catalog system '" + name + "'");
}

CatalogEntry entry_from_spec(SystemSpec spec) {
    CatalogEntry e;
    e.x0 = VectorXd::Constant(spec.n, 0.1);
    e.portrait_inits = {e.x0};
    e.recommended_h = {0.1};
    e.provenance = "loaded from file";
    e.spec = std::move(spec);
    return e;
}

}  // namespace kahan
