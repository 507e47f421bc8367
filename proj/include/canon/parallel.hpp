// Tiny parallel_for for embarrassingly parallel grid sweeps.
#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace canon {

// Global worker count used by grid sweeps; set from the CLI --threads flag.
int parallel_threads();
void set_parallel_threads(int n);

// Runs fn(i) for i in [0, n). Order unspecified; fn must be data-race free.
inline void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
    const int workers = parallel_threads();
    if (workers <= 1 || n < 4) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    const int count = static_cast<int>(std::min<size_t>(static_cast<size_t>(workers), n));
    pool.reserve(static_cast<size_t>(count));
    for (int t = 0; t < count; ++t) {
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (std::thread& th : pool) th.join();
}

}  // namespace canon
