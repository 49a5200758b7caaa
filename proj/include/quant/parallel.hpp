#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace quant {

// Worker cap: explicit setting wins, then QUANT_THREADS, then hardware.
inline int& thread_override() {
    static int value = 0;  // 0 = unset
    return value;
}

inline void set_thread_count(int n) { thread_override() = n; }

inline int thread_count() {
    if (thread_override() > 0) return thread_override();
    if (const char* env = std::getenv("QUANT_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [begin, end) across workers. Each index must be
// independent; results are then bitwise identical for any worker count.
template <typename Fn>
void parallel_for(std::ptrdiff_t begin, std::ptrdiff_t end, Fn&& fn) {
    const std::ptrdiff_t count = end - begin;
    if (count <= 0) return;
    const int workers = std::min<std::ptrdiff_t>(thread_count(), count);
    if (workers <= 1 || count < 64) {
        for (std::ptrdiff_t i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    const std::ptrdiff_t chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::ptrdiff_t lo = begin + w * chunk;
        const std::ptrdiff_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::ptrdiff_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace quant
