#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace recov {

// Runs body(i) for i in [0, n). With jobs <= 1 the loop is plain serial.
// Bodies must be independent; any aggregation the caller does across
// iterations has to be order-insensitive for parallel == serial to hold.
// The first exception thrown by a body is rethrown on the calling thread.
inline void parallel_for(std::int64_t n, int jobs, const std::function<void(std::int64_t)>& body) {
    if (n <= 0) return;
    if (jobs <= 1 || n == 1) {
        for (std::int64_t i = 0; i < n; ++i) body(i);
        return;
    }
    const int workers = static_cast<int>(std::min<std::int64_t>(jobs, n));
    std::atomic<std::int64_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    auto work = [&]() {
        for (;;) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace recov
