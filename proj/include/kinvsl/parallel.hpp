#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace kinvsl {

/// Worker cap: min(hardware, KINVSL_THREADS).  A value of 1 disables
/// threading entirely.
inline unsigned thread_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("KINVSL_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1 && static_cast<unsigned>(v) < hw) hw = static_cast<unsigned>(v);
    }
    return hw;
}

/// Index-space parallel loop.  `body(i)` must only write to slot i of
/// caller-owned storage; reduction stays with the caller so results are
/// deterministic regardless of the thread count.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
    unsigned workers = thread_count();
    if (workers <= 1 || n < 64) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace kinvsl
