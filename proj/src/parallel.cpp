#include "tqk/parallel.hpp"

#include <atomic>

namespace tqk {

namespace {
std::atomic<int> g_num_threads{1};
}

void set_num_threads(int n) {
    g_num_threads.store(n < 1 ? 1 : n, std::memory_order_relaxed);
}

int num_threads() {
    return g_num_threads.load(std::memory_order_relaxed);
}

namespace detail {
int clamp_threads(int n, int64_t work_items) {
    if (work_items < n) n = static_cast<int>(work_items);
    return n < 1 ? 1 : n;
}
} // namespace detail

} // namespace tqk
