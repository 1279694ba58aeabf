#include "kahan/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

namespace kahan {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::ios_base::failure("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw std::ios_base::failure("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::ios_base::failure("cannot rename into " + path.string() + ": " + ec.message());
    }
}

std::string trajectory_csv(const Trajectory<double>& traj, const HamiltonianSystem<double>* sys) {
    std::ostringstream out;
    const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();
    out << "step,t";
    for (Eigen::Index i = 1; i <= n; ++i) out << ",x" << i;
    MatrixXd cas;
    const auto a = traj.method.family_parameter();
    const bool measured = a && (*a == -0.5 || *a == 0.0 || *a == 0.5);
    if (sys) {
        cas = casimir_basis(sys->poisson);
        out << ",H,Htilde,measure";
        for (Eigen::Index j = 1; j <= cas.cols(); ++j) out << ",casimir_" << j;
    }
    out << '\n';
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t r = 0; r < traj.states.size(); ++r) {
        const auto& x = traj.states[r];
        const long k = traj.step_index[r];
        out << k << ',' << format_double(static_cast<double>(k) * traj.h);
        for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(x[i]);
        if (sys) {
            out << ',' << format_double(value(sys->hamiltonian, x));
            out << ',' << format_double(try_modified_hamiltonian(*sys, x, traj.h).value_or(nan));
            double m = nan;
            if (measured) {
                try {
                    m = measure_density(*a, sys->field, x, traj.h);
                } catch (const std::exception&) {
                }
            }
            out << ',' << format_double(m);
            for (Eigen::Index j = 0; j < cas.cols(); ++j) out << ',' << format_double(cas.col(j).dot(x));
        }
        out << '\n';
    }
    return out.str();
}

std::string grid_csv(const Grid& grid) {
    std::ostringstream out;
    out << "x,y,value,mask\n";
    for (int iy = 0; iy < grid.resolution; ++iy)
        for (int ix = 0; ix < grid.resolution; ++ix)
            out << format_double(grid.xs[static_cast<std::size_t>(ix)]) << ','
                << format_double(grid.ys[static_cast<std::size_t>(iy)]) << ','
                << format_double(grid.value(ix, iy)) << ',' << (grid.masked(ix, iy) ? 1 : 0) << '\n';
    return out.str();
}

std::string sweep_csv(const DriftSweepResult& sweep) {
    std::ostringstream out;
    out << "a,slope,flag\n";
    for (const auto& row : sweep.rows)
        out << format_double(row.a) << ',' << format_double(row.slope) << ',' << to_string(row.flag) << '\n';
    return out.str();
}

std::string portrait_csv(const std::vector<Orbit>& orbits, Eigen::Index n) {
    std::ostringstream out;
    out << "orbit,k";
    for (Eigen::Index i = 1; i <= n; ++i) out << ",x" << i;
    out << ",truncated\n";
    for (std::size_t o = 0; o < orbits.size(); ++o)
        for (std::size_t k = 0; k < orbits[o].points.size(); ++k) {
            out << o << ',' << k;
            for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(orbits[o].points[k][i]);
            out << ',' << (orbits[o].truncation == Truncation::None ? 0 : 1) << '\n';
        }
    return out.str();
}

std::string points_csv(const std::vector<VectorXd>& points, Eigen::Index n) {
    std::ostringstream out;
    for (Eigen::Index i = 1; i <= n; ++i) out << (i > 1 ? "," : "") << 'x' << i;
    out << '\n';
    for (const auto& p : points) {
        for (Eigen::Index i = 0; i < n; ++i) out << (i > 0 ? "," : "") << format_double(p[i]);
        out << '\n';
    }
    return out.str();
}

nlohmann::json report_json(const ConservedReport& report) {
    nlohmann::json out = nlohmann::json::array();
    const auto num = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return nullptr;
    };
    for (const auto& s : report.series)
        out.push_back({{"name", s.name},
                       {"samples", s.values.size()},
                       {"first", s.values.empty() ? nlohmann::json(nullptr) : num(s.values.front())},
                       {"last", s.values.empty() ? nlohmann::json(nullptr) : num(s.values.back())},
                       {"max_relative_drift", num(s.max_relative_drift)},
                       {"drift_slope", num(s.drift_slope)}});
    return {{"series", std::move(out)}};
}

}  // namespace kahan
