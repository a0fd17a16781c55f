#pragma once

#include <cstddef>
#include <functional>

namespace scc {

// Thread count used by parallel_for. Zero means "not set": the value of
// SC_CONTROL_THREADS is used if present, otherwise hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs body(i) for i in [0, n) over contiguous static chunks. Callers write
// results into per-index slots and reduce sequentially afterwards, so the
// output never depends on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace scc
