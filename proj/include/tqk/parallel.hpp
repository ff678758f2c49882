#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace tqk {

// Worker count for parallel_for. Kernels must produce bit-identical results
// for any value; the default of 1 keeps single-shot runs cheap.
void set_num_threads(int n);
int num_threads();

namespace detail {
int clamp_threads(int n, int64_t work_items);
}

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
// worker; fn must only write state owned by index i.
template <typename F>
void parallel_for(int64_t n, F && fn) {
    if (n <= 0) return;
    const int workers = detail::clamp_threads(num_threads(), n);
    if (workers <= 1) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const int64_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const int64_t lo = w * chunk;
        const int64_t hi = lo + chunk < n ? lo + chunk : n;
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto & t : pool) t.join();
}

} // namespace tqk
