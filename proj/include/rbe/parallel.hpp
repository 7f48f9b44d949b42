/**
 * Minimal work-sharing over an index range.
 *
 * Callers split work into a fixed number of items that does not depend on
 * the thread count and reduce per-item results in index order, so results
 * are bitwise identical for any number of threads.
 */
#pragma once

#include <cstddef>
#include <functional>

namespace rbe {

//! Number of worker threads used by parallel_for (>= 1).
int thread_count();
//! 0 selects the hardware concurrency.
void set_thread_count(int n);

//! Call body(i) for i in [0, count); items are claimed dynamically.
void parallel_for(std::size_t count, std::function<void(std::size_t)> const& body);

}  // namespace rbe
