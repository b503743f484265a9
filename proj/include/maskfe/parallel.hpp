#pragma once

#include <cstddef>
#include <functional>

namespace maskfe {

// AUTOMAN_THREADS when set to a positive integer, else 1.
std::size_t worker_threads();

// Runs fn(0..count-1) on up to `threads` workers. The first exception thrown
// by any task is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, std::size_t threads = worker_threads());

// Keeps large tensor buffers on the heap between training steps instead of
// mapping and unmapping them each time. Process-wide; a no-op off glibc.
void retain_heap_memory();

}  // namespace maskfe
