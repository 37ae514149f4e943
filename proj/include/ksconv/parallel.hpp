#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ksconv {

struct ExecOptions {
    /// Worker threads; 1 runs every unit inline on the calling thread.
    unsigned threads = 1;
};

/// Runs fn(unit) for unit in [0, units). Units are claimed dynamically, so
/// fn must only write state owned by its unit. The first exception thrown by
/// any unit is rethrown on the caller after all workers have joined.
template <typename Fn>
void parallel_for(std::size_t units, unsigned threads, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), units);
    if (workers <= 1) {
        for (std::size_t u = 0; u < units; ++u) fn(u);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t u = next.fetch_add(1); u < units; u = next.fetch_add(1)) {
                    try {
                        fn(u);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                        next.store(units);
                    }
                }
            });
    }
    if (error) std::rethrow_exception(error);
}

} // namespace ksconv
