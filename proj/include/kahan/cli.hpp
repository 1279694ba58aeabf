#pragma once

// kahan-geom command-line front end. `run_main` is the whole program; the
// executable only forwards argv.

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "kahan/experiments.hpp"

namespace kahan::cli {

enum ExitCode : int { kOk = 0, kValidation = 2, kVerifyFailed = 3, kIo = 4 };

/// Parses "kahan", "suzuki", "midpoint", "trapezoidal", "simpson", "family:<a>"
/// or "family" (parameter taken from `a`). Throws std::invalid_argument.
[[nodiscard]] MethodId parse_method(const std::string& text, double a);

/// Comma-separated floats; throws std::invalid_argument on junk.
[[nodiscard]] std::vector<double> parse_list(const std::string& text);

/// Randomized property suite used by `verify`. Deterministic given `seed`.
[[nodiscard]] nlohmann::json verify_report(const CatalogEntry& entry, double h, unsigned long seed);

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kahan::cli
