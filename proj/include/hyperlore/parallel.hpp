#pragma once

#include <cstddef>
#include <functional>

namespace hyperlore {

// Worker cap for data-parallel loops. Defaults to the hardware concurrency;
// the CLI routes --threads (and the HYPERLORE_THREADS environment variable)
// through set_thread_budget. Values below 1 are clamped to 1.
int thread_budget();
void set_thread_budget(int n);

// Runs fn(i) for every i in [begin, end), statically partitioned over at most
// thread_budget() workers. fn must only write to slots owned by its own index;
// there is no ordering guarantee across indices. Falls back to a plain loop
// when the budget is 1 or the range is small. Exceptions thrown by fn are
// rethrown on the calling thread (one of them, if several workers throw).
void parallel_for(std::ptrdiff_t begin, std::ptrdiff_t end,
                  const std::function<void(std::ptrdiff_t)>& fn);

}  // namespace hyperlore
