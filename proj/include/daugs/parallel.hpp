#pragma once

#include <cstddef>
#include <functional>

namespace daugs {

// Number of workers used when the caller passes jobs <= 0.
int default_jobs();

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Workers pull the next
// index from a shared counter, so scheduling is dynamic; callers write
// results into per-index slots to keep output order fixed. If any call
// throws, the exception of the lowest failing index is rethrown after all
// workers join.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace daugs
