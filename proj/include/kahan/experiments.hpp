#pragma once

// Named example systems and the figure-reproduction harness. Everything here
// is double precision; results are plain data for the CSV writers.

#include <optional>
#include <string>
#include <vector>

#include "kahan/conserved.hpp"
#include "kahan/integrators.hpp"
#include "kahan/system_spec.hpp"

namespace kahan {

struct CatalogEntry {
    SystemSpec spec;
    std::vector<double> recommended_h;
    VectorXd x0;
    std::vector<VectorXd> portrait_inits;
    std::string provenance;
};

[[nodiscard]] std::vector<CatalogEntry> catalog();
/// Throws std::out_of_range for unknown names.
[[nodiscard]] CatalogEntry catalog_entry(const std::string& name);
/// Wraps a loaded spec; x0 defaults to 0.1 in every coordinate.
[[nodiscard]] CatalogEntry entry_from_spec(SystemSpec spec);

/// Worker count: KAHAN_GEOM_THREADS when set and positive, otherwise the
/// hardware concurrency (at least 1).
[[nodiscard]] unsigned worker_count();

enum class RunFlag { Ok, Diverged, Singular, NoConvergence, Undefined };
[[nodiscard]] const char* to_string(RunFlag f);

struct DriftRow {
    double a = 0.0;
    double slope = 0.0;  // per step; NaN when flagged
    RunFlag flag = RunFlag::Ok;
    std::string proxy;   // "Htilde" for a = -1/2; "E2" or "H" otherwise
};

struct DriftSweepResult {
    double h = 0.0;
    long steps = 0;
    VectorXd x0;
    std::vector<DriftRow> rows;
};

/// Fraction of leading samples discarded before the drift fit.
inline constexpr double kDriftTransientFraction = 0.01;

/// Least-squares slope of values[k] against k after dropping the transient.
[[nodiscard]] double drift_slope(const std::vector<double>& values);

/// Energy proxy for a != -1/2: the O(h^4) family energy (see family_energy),
/// or plain H.
enum class DriftProxy { FamilyEnergy, Hamiltonian };

/// Runs the family for each a and fits the drift of the energy proxy
/// (Htilde for a = -1/2). Rows come back in input order.
[[nodiscard]] DriftSweepResult drift_sweep(const CatalogEntry& entry, const std::vector<double>& a_values, double h,
                                           long steps, const VectorXd& x0, unsigned threads = 0,
                                           DriftProxy proxy = DriftProxy::FamilyEnergy);

enum class GridQuantity { H, Htilde };

/// Axis-aligned 2D slice: axes (ax, ay) vary over [lo, hi], other coordinates
/// sit at `base`.
struct GridBox {
    double x_lo = -1.0, x_hi = 1.0, y_lo = -1.0, y_hi = 1.0;
    Eigen::Index ax = 0, ay = 1;
    VectorXd base;  // empty means zero
};

struct Grid {
    int resolution = 0;
    std::vector<double> xs, ys;  // node coordinates along each axis
    std::vector<double> values;  // row-major, values[iy * res + ix]; NaN where masked
    std::vector<unsigned char> mask;  // 1 where |det(I - h/2 f')| < 1e-9 or det changes sign to a neighbour

    [[nodiscard]] double value(int ix, int iy) const { return values[static_cast<std::size_t>(iy * resolution + ix)]; }
    [[nodiscard]] bool masked(int ix, int iy) const { return mask[static_cast<std::size_t>(iy * resolution + ix)] != 0; }
};

[[nodiscard]] Grid level_set_grid(const CatalogEntry& entry, GridQuantity quantity, double h, const GridBox& box,
                                  int resolution, unsigned threads = 0);

struct Orbit {
    VectorXd init;
    std::vector<VectorXd> points;
    Truncation truncation = Truncation::None;
};

[[nodiscard]] std::vector<Orbit> phase_portrait(const CatalogEntry& entry, const MethodId& method, double h,
                                                const std::vector<VectorXd>& inits, long steps, long stride = 1);

struct SuzukiDrift {
    std::optional<double> slope;  // nullopt when undefined (N = 0 or truncated)
    std::vector<double> series;   // Htilde(x_k, h)
    RunFlag flag = RunFlag::Ok;
};

/// H-tilde drift along a trajectory of `method` (Suzuki composition by default).
[[nodiscard]] SuzukiDrift suzuki_drift(const CatalogEntry& entry, double h, long steps, const VectorXd& x0,
                                       const MethodId& method = MethodId::suzuki_kahan());

/// Threshold on |det(I - h/2 f'(x))| for the singular-set scan.
inline constexpr double kSingularScanThreshold = 1e-3;

[[nodiscard]] std::vector<VectorXd> singular_scan(const CatalogEntry& entry, double h, const GridBox& box,
                                                  int resolution);

}  // namespace kahan
