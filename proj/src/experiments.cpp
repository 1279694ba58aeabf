#include "kahan/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace kahan {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

RunFlag flag_of(Truncation t) {
    switch (t) {
        case Truncation::None: return RunFlag::Ok;
        case Truncation::SingularStep: return RunFlag::Singular;
        case Truncation::Diverged: return RunFlag::Diverged;
        case Truncation::NoConvergence: return RunFlag::NoConvergence;
    }
    return RunFlag::Undefined;
}

/// Runs work(i) for i in [0, count) on up to `threads` workers, static striping.
template <typename Work>
void parallel_for(std::size_t count, unsigned threads, Work&& work) {
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) work(i);
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) work(i);
        });
    for (auto& t : pool) t.join();
}

VectorXd grid_point(const GridBox& box, Eigen::Index n, double x, double y) {
    VectorXd p = box.base.size() == n ? box.base : VectorXd::Zero(n);
    p[box.ax] = x;
    p[box.ay] = y;
    return p;
}

std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        out[static_cast<std::size_t>(i)] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
    return out;
}

void require_planar_box(const CatalogEntry& entry, const GridBox& box) {
    const Eigen::Index n = entry.spec.n;
    if (box.ax < 0 || box.ay < 0 || box.ax >= n || box.ay >= n || box.ax == box.ay)
        throw DimensionMismatch("grid: slice axes must be two distinct coordinates");
    if (n > 2 && box.base.size() != 0 && box.base.size() != n)
        throw DimensionMismatch("grid: slice base point has the wrong dimension");
}

}  // namespace

const char* to_string(RunFlag f) {
    switch (f) {
        case RunFlag::Ok: return "ok";
        case RunFlag::Diverged: return "diverged";
        case RunFlag::Singular: return "singular";
        case RunFlag::NoConvergence: return "no_convergence";
        case RunFlag::Undefined: return "undefined";
    }
    return "unknown";
}

unsigned worker_count() {
    if (const char* env = std::getenv("KAHAN_GEOM_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

double drift_slope(const std::vector<double>& values) {
    const auto skip = static_cast<std::size_t>(std::floor(kDriftTransientFraction * static_cast<double>(values.size())));
    std::vector<double> ts, ys;
    for (std::size_t k = skip; k < values.size(); ++k) {
        ts.push_back(static_cast<double>(k));
        ys.push_back(values[k]);
    }
    return fit_line(ts, ys).slope;
}

DriftSweepResult drift_sweep(const CatalogEntry& entry, const std::vector<double>& a_values, double h, long steps,
                             const VectorXd& x0, unsigned threads, DriftProxy proxy_kind) {
    const auto sys = entry.spec.hamiltonian_system();
    DriftSweepResult result;
    result.h = h;
    result.steps = steps;
    result.x0 = x0;
    result.rows.resize(a_values.size());
    parallel_for(a_values.size(), threads == 0 ? worker_count() : threads, [&](std::size_t i) {
        const double a = a_values[i];
        DriftRow row;
        row.a = a;
        const bool kahan = (a == -0.5);
        const bool plain = proxy_kind == DriftProxy::Hamiltonian;
        row.proxy = kahan ? "Htilde" : plain ? "H" : "E2";
        Observer<double> proxy{row.proxy, [&sys, h, a, kahan, plain](const VectorXd& x) {
                                   if (kahan) return try_modified_hamiltonian(sys, x, h).value_or(kNaN);
                                   if (plain) return value(sys.hamiltonian, x);
                                   return family_energy(a, sys, x, h);
                               }};
        IterateOptions opts;
        opts.stride = 1;
        const auto method = kahan ? MethodId::kahan() : MethodId::family(a);
        const auto traj = iterate(method, sys.field, x0, h, steps, {proxy}, opts);
        row.flag = flag_of(traj.truncation);
        const auto& series = traj.columns[0];
        if (row.flag == RunFlag::Ok && std::any_of(series.begin(), series.end(), [](double v) { return !std::isfinite(v); }))
            row.flag = RunFlag::Singular;
        row.slope = row.flag == RunFlag::Ok && series.size() >= 3 ? drift_slope(series) : kNaN;
        if (row.flag == RunFlag::Ok && series.size() < 3) row.flag = RunFlag::Undefined;
        result.rows[i] = std::move(row);
    });
    return result;
}

Grid level_set_grid(const CatalogEntry& entry, GridQuantity quantity, double h, const GridBox& box, int resolution,
                    unsigned threads) {
    if (resolution < 1) throw std::invalid_argument("level_set_grid: resolution must be positive");
    require_planar_box(entry, box);
    const auto sys = entry.spec.hamiltonian_system();
    Grid g;
    g.resolution = resolution;
    g.xs = linspace(box.x_lo, box.x_hi, resolution);
    g.ys = linspace(box.y_lo, box.y_hi, resolution);
    const auto res = static_cast<std::size_t>(resolution);
    const auto cells = res * res;
    g.values.assign(cells, kNaN);
    g.mask.assign(cells, 0);
    std::vector<double> det(cells, kNaN);
    parallel_for(res, threads == 0 ? worker_count() : threads, [&](std::size_t iy) {
        for (std::size_t ix = 0; ix < res; ++ix) {
            const auto cell = iy * res + ix;
            const VectorXd x = grid_point(box, sys.dim(), g.xs[ix], g.ys[iy]);
            if (quantity == GridQuantity::H) {
                g.values[cell] = value(sys.hamiltonian, x);
                continue;
            }
            det[cell] = kahan_determinant(sys.field, x, h);
            if (const auto v = try_modified_hamiltonian(sys, x, h)) {
                g.values[cell] = *v;
            } else {
                g.mask[cell] = 1;
            }
        }
    });
    if (quantity == GridQuantity::H) return g;
    // The zero set of det almost never hits a node exactly; mark the node on
    // the smaller-|det| side of every sign change between grid neighbours.
    const auto mark = [&](std::size_t a, std::size_t b) {
        if (!(det[a] * det[b] < 0.0)) return;
        const auto c = std::abs(det[a]) <= std::abs(det[b]) ? a : b;
        g.mask[c] = 1;
        g.values[c] = kNaN;
    };
    for (std::size_t iy = 0; iy < res; ++iy)
        for (std::size_t ix = 0; ix < res; ++ix) {
            const auto cell = iy * res + ix;
            if (ix + 1 < res) mark(cell, cell + 1);
            if (iy + 1 < res) mark(cell, cell + res);
        }
    return g;
}

std::vector<Orbit> phase_portrait(const CatalogEntry& entry, const MethodId& method, double h,
                                  const std::vector<VectorXd>& inits, long steps, long stride) {
    const auto vf = entry.spec.vector_field();
    std::vector<Orbit> orbits;
    for (const auto& x0 : inits) {
        IterateOptions opts;
        opts.stride = std::max(1L, stride);
        auto traj = iterate(method, vf, x0, h, steps, {}, opts);
        orbits.push_back({x0, std::move(traj.states), traj.truncation});
    }
    return orbits;
}

SuzukiDrift suzuki_drift(const CatalogEntry& entry, double h, long steps, const VectorXd& x0, const MethodId& method) {
    const auto sys = entry.spec.hamiltonian_system();
    SuzukiDrift out;
    Observer<double> ht{"Htilde",
                        [&sys, h](const VectorXd& x) { return try_modified_hamiltonian(sys, x, h).value_or(kNaN); }};
    IterateOptions opts;
    opts.stride = 1;
    const auto traj = iterate(method, sys.field, x0, h, steps, {ht}, opts);
    out.series = traj.columns[0];
    out.flag = flag_of(traj.truncation);
    if (out.flag == RunFlag::Ok && std::any_of(out.series.begin(), out.series.end(), [](double v) { return !std::isfinite(v); }))
        out.flag = RunFlag::Singular;
    if (out.flag == RunFlag::Ok && out.series.size() >= 3) {
        out.slope = drift_slope(out.series);
    } else if (out.flag == RunFlag::Ok) {
        out.flag = RunFlag::Undefined;
    }
    return out;
}

std::vector<VectorXd> singular_scan(const CatalogEntry& entry, double h, const GridBox& box, int resolution) {
    if (resolution < 1) throw std::invalid_argument("singular_scan: resolution must be positive");
    require_planar_box(entry, box);
    const auto vf = entry.spec.vector_field();
    const auto xs = linspace(box.x_lo, box.x_hi, resolution);
    const auto ys = linspace(box.y_lo, box.y_hi, resolution);
    std::vector<VectorXd> hits;
    for (double y : ys)
        for (double x : xs) {
            const VectorXd p = grid_point(box, vf.dim(), x, y);
            if (std::abs(kahan_determinant(vf, p, h)) < kSingularScanThreshold) hits.push_back(p);
        }
    return hits;
}

}  // namespace kahan
