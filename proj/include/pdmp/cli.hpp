#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pdmp {

inline constexpr const char* kToolVersion = "0.1.0";

// Runs one CLI invocation. Exit codes: 0 success, 2 configuration or
// usage error, 1 runtime failure. All artifacts land in --out-dir under
// fixed names (report.json, measure.json, paths.csv, manifest.json).
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pdmp
