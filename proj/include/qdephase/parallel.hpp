// parallel.hpp - Minimal static-partition parallel loop.
//
// The worker count comes from QDEPHASE_THREADS when set, otherwise from
// std::thread::hardware_concurrency(). Work items are independent, so results
// do not depend on the partition.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace qdephase {

inline std::size_t thread_count() {
    if (const char* env = std::getenv("QDEPHASE_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<std::size_t>(v);
        } catch (...) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Calls body(begin, end, worker) on contiguous chunks of [0, n).
template <typename Body>
void parallel_for_chunks(std::size_t n, Body&& body, std::size_t workers = thread_count()) {
    if (n == 0) return;
    workers = std::clamp<std::size_t>(workers, 1, n);
    if (workers == 1) {
        body(std::size_t{0}, n, std::size_t{0});
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end, w] {
            try {
                body(begin, end, w);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    pool.clear();  // joins
    if (failure) std::rethrow_exception(failure);
}

}  // namespace qdephase
