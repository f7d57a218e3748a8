#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sasim::figures {

struct FigureInputs {
  /// Run report of a DAE simulation (needed by window-histogram).
  std::optional<std::filesystem::path> report;
};

/// Known ids: window-histogram, error-vs-order, adaptive-vs-order.
const std::vector<std::string>& figure_ids();

/// Writes one delimited file per curve into `out_dir` and returns their paths.
/// Errors: missing_prerequisite when a required run artifact is absent,
/// contract_violation for an unknown id.
std::vector<std::filesystem::path> emit_figure_data(const std::string& id, const FigureInputs& in,
                                                    const std::filesystem::path& out_dir);

}  // namespace sasim::figures
