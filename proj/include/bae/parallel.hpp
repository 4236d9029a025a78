#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace bae {

/// Worker count from BAE_WORKERS, falling back to 1.
inline std::size_t workers_from_env() {
    const char* raw = std::getenv("BAE_WORKERS");
    if (raw == nullptr) return 1;
    try {
        const long n = std::stol(raw);
        return n > 0 ? static_cast<std::size_t>(n) : 1;
    } catch (const std::exception&) {
        return 1;
    }
}

/// Runs body(i) for i in [0, count) on at most `workers` threads. The first
/// exception thrown by any task is rethrown after all workers join.
template <typename Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        const std::size_t n = workers < count ? workers : count;
        pool.reserve(n);
        for (std::size_t w = 0; w < n; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                    }
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace bae
