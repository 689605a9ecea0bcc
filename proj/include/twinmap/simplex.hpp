#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace twinmap {

struct SimplexOptions {
  std::size_t max_iterations = 2000;
  /// Converged when every vertex lies within this infinity-norm distance of
  /// the best vertex.
  double tolerance = 1e-6;
  double initial_step = 0.25;
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  /// Best objective value after each iteration.
  std::vector<double> best_trace;
};

using Objective = std::function<double(std::span<const double>)>;

/// Nelder-Mead with dimension-adaptive coefficients (reflection 1,
/// expansion 1 + 2/n, contraction 0.75 - 1/(2n), shrink 1 - 1/n).
SimplexResult nelder_mead(const Objective &f, std::vector<double> x0,
                          const SimplexOptions &options = {});

} // namespace twinmap
