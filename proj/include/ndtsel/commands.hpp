#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "ndtsel/manifest.hpp"
#include "ndtsel/selector.hpp"

namespace ndtsel {

struct SelectOutcome {
    SelectionReport report;
    std::filesystem::path out_dir;
};

/// Runs the sweep and writes report.json, curves.csv, runs.csv, verdict.txt
/// and manifest.json into manifest.out. The summary row goes to `console`.
SelectOutcome cmd_select(const RunManifest& manifest, std::ostream& console);

/// Writes the synthetic dataset as CSV (label in the last column).
void cmd_simulate(std::size_t n, std::size_t d, std::uint64_t seed, double separation,
                  const std::filesystem::path& out_path);

/// Human-readable summary of a report.json: verdict, gamma*, curve extrema and
/// the configuration echo.
std::string cmd_inspect(const std::filesystem::path& report_path);

}  // namespace ndtsel
