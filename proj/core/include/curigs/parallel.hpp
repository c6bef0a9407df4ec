#pragma once

#include <cstddef>
#include <functional>

namespace curigs {

/// Worker count for render fan-out. Reads CURIGS_THREADS once; falls back to
/// hardware concurrency.
int worker_count();
/// Overrides the worker count for this process (0 restores the default).
void set_worker_count(int n);

/// Calls fn(i) for every i in [0, n). Work is split into contiguous static
/// chunks; fn must only write to slots owned by i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace curigs
