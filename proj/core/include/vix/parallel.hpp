#pragma once

#include <cstddef>
#include <functional>

namespace vix {

/// Runs fn(i) for every i in [0, n) on up to `workers` threads. Completion
/// order is arbitrary; callers are responsible for order-preserving assembly.
/// The first exception thrown by any fn is rethrown after all workers drain.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

} // namespace vix
