#pragma once

#include <cstddef>
#include <functional>

namespace hho {

/// Number of worker threads. Reads HHO_THREADS once; 0 or unset means
/// std::thread::hardware_concurrency().
unsigned thread_count();

/// Overrides the worker count for the rest of the process (0 restores the default).
void set_thread_count(unsigned n);

/// Calls body(i, worker) for every i in [0, n). With `static_chunks` each worker
/// owns one contiguous range, so the (i, worker) pairing is reproducible;
/// otherwise indices are handed out dynamically.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t i, unsigned worker)>& body,
                  bool static_chunks = true);

}  // namespace hho
