#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace crystal::detail {

// Process-wide default set through the C API.
inline std::atomic<int> default_threads{0};

// CRYSTAL_THREADS wins over the requested count, which wins over the default.
inline int thread_count(int requested) {
    if (const char* env = std::getenv("CRYSTAL_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    if (requested > 0) return requested;
    if (int d = default_threads.load(); d > 0) return d;
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n). Each index is handled exactly once, so results
// written to per-index slots do not depend on the thread count.
template <class Fn>
void parallel_for(std::int64_t n, int threads, Fn&& fn) {
    const int t = static_cast<int>(std::min<std::int64_t>(thread_count(threads), std::max<std::int64_t>(n / 64, 1)));
    if (t <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr failure;
    std::mutex m;
    auto worker = [&] {
        try {
            for (std::int64_t chunk; (chunk = next.fetch_add(64)) < n;)
                for (std::int64_t i = chunk; i < std::min(n, chunk + 64); ++i) fn(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(m);
            if (!failure) failure = std::current_exception();
            next = n;
        }
    };
    std::vector<std::thread> pool;
    for (int i = 1; i < t; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace crystal::detail
