#pragma once

// File formats: JSON case files, delimited trajectory files and JSON run reports.
// See docs/formats.md.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sasim/benchmark.hpp"
#include "sasim/case.hpp"
#include "sasim/engine.hpp"

namespace sasim::io {

inline constexpr int kCaseFormatVersion = 1;
inline constexpr int kTrajectoryFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

/// Parses and validates a case document. `source` names the document in diagnostics.
/// Errors: case_parse (syntax, types, invalid values), case_reference (unknown
/// bus ids), case_mismatch (power flow not satisfied to 1e-6 pu).
Case parse_case(const std::string& text, const std::string& source = "<case>");
Case load_case(const std::filesystem::path& path);

/// Largest per-bus complex power mismatch of the stored power-flow solution (pu).
double power_flow_mismatch(const Case& c);

void write_trajectory(const std::filesystem::path& path, const engine::Trajectory& tr);
/// Reads times, channels, rows and interpolation flags; window metadata is not stored in the file.
engine::Trajectory read_trajectory(const std::filesystem::path& path);

struct ComparisonSummary {
  std::string reference;  // path or label of the reference trajectory
  std::vector<engine::ChannelDiff> channels;
  double max_rotor_angle_deg = 0.0;
};

struct RunInfo {
  std::string case_name;
  engine::SimConfig config;
  std::optional<ComparisonSummary> comparison;
};

/// RunReport document for a DAE simulation.
std::string run_report_json(const RunInfo& info, const engine::Trajectory& tr);

/// RunReport document for a linear benchmark run.
std::string benchmark_report_json(const benchmark::LinearBenchmark& b, const benchmark::BenchmarkOptions& opts,
                                  const benchmark::BenchmarkReport& rep);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace sasim::io
