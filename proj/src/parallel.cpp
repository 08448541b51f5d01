#include "hyperlore/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hyperlore {

namespace {

int default_budget() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::atomic<int>& budget_slot() {
  static std::atomic<int> budget{default_budget()};
  return budget;
}

}  // namespace

int thread_budget() { return budget_slot().load(std::memory_order_relaxed); }

void set_thread_budget(int n) {
  budget_slot().store(std::max(1, n), std::memory_order_relaxed);
}

void parallel_for(std::ptrdiff_t begin, std::ptrdiff_t end,
                  const std::function<void(std::ptrdiff_t)>& fn) {
  const std::ptrdiff_t count = end - begin;
  if (count <= 0) return;

  const int budget = thread_budget();
  // Spinning up threads for a handful of items costs more than it saves.
  const std::ptrdiff_t workers =
      std::min<std::ptrdiff_t>(budget, (count + 63) / 64);
  if (workers <= 1) {
    for (std::ptrdiff_t i = begin; i < end; ++i) fn(i);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (std::ptrdiff_t w = 0; w < workers; ++w) {
    // Contiguous blocks: worker w owns [begin + w*chunk, ...).
    const std::ptrdiff_t chunk = (count + workers - 1) / workers;
    const std::ptrdiff_t lo = begin + w * chunk;
    const std::ptrdiff_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn, &first_error, &error_mutex] {
      try {
        for (std::ptrdiff_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace hyperlore
