#pragma once

#include <functional>
#include <span>
#include <vector>

namespace slowfast::detail {

/// Exact balanced transportation problem: minimise sum c(i, j) F_ij subject to
/// row sums `supply` and column sums `demand` (equal totals, nonnegative
/// costs). Successive shortest paths with Dijkstra on reduced costs.
double transport_cost(std::span<const double> supply, std::span<const double> demand,
                      const std::function<double(std::size_t, std::size_t)>& cost);

}  // namespace slowfast::detail
