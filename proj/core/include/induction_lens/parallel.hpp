#pragma once

#include <cstddef>
#include <functional>

namespace ilens {

// Worker count for pure, independent jobs: 1 in deterministic mode, otherwise the hardware
// concurrency capped by INDUCTION_LENS_THREADS when that variable holds a positive integer.
std::size_t worker_count(bool deterministic);

// Runs fn(0) ... fn(n-1) on up to `workers` threads. Each index runs exactly once; the
// exception of the lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace ilens
