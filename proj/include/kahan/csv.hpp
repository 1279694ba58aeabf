#pragma once

// CSV and JSON artifact writers. Floats carry 17 significant digits; files
// are written to a temporary sibling and renamed into place.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kahan/conserved.hpp"
#include "kahan/experiments.hpp"

namespace kahan {

[[nodiscard]] std::string format_double(double v);

/// Writes `content` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Header: step,t,x1..xn,H,Htilde,measure,casimir_1..  (H-related columns are
/// emitted only when `sys` is given).
[[nodiscard]] std::string trajectory_csv(const Trajectory<double>& traj, const HamiltonianSystem<double>* sys);
/// Header: x,y,value,mask.
[[nodiscard]] std::string grid_csv(const Grid& grid);
/// Header: a,slope,flag.
[[nodiscard]] std::string sweep_csv(const DriftSweepResult& sweep);
/// Header: orbit,k,x1..xn,truncated.
[[nodiscard]] std::string portrait_csv(const std::vector<Orbit>& orbits, Eigen::Index n);
/// Header: x1..xn.
[[nodiscard]] std::string points_csv(const std::vector<VectorXd>& points, Eigen::Index n);

[[nodiscard]] nlohmann::json report_json(const ConservedReport& report);

}  // namespace kahan
