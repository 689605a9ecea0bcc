#pragma once
// JSON fit reports.

#include <twinmap/reconstruct.hpp>

#include <string>
#include <vector>

namespace twinmap {

struct FitReportInput {
  std::vector<std::string> map_paths;
  FitModel model;
  OptimizerOptions options;
  Axis axis = Axis::x;
  ModelSelection selection;
};

/// Pretty-printed JSON: inputs, the selected K, and per-K parameters,
/// residual, score and convergence.
std::string fit_report_json(const FitReportInput &input);

} // namespace twinmap
