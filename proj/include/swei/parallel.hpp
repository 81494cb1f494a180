#pragma once

#include <cstddef>
#include <functional>

namespace swei {

/// Worker cap: SWEI_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for every i in [0, n) on up to `threads` workers. Each index
/// runs exactly once; if any calls throw, the exception from the lowest index
/// is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace swei
