#pragma once

#include <cstddef>
#include <functional>

namespace slowfast {

/// Number of workers used when a caller passes 0.
unsigned default_workers() noexcept;

/// Runs body(i) for i in [0, n) on `workers` threads using static contiguous
/// chunks. Results must be written by index; the first exception thrown by
/// any worker (lowest index wins) is rethrown on the calling thread.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace slowfast
