#pragma once

#include <cstddef>
#include <functional>

namespace gridbench {

/// Runs fn(0..count-1) on at most `workers` threads (the caller included).
/// Tasks must write to disjoint outputs; the first exception thrown by any
/// task is rethrown after all workers have stopped.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

/// Worker count used when a configuration asks for 0 ("auto").
int default_worker_count();

}  // namespace gridbench
