#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace adsrc {

/// Index-parallel loop over [0, n). Results must go to pre-indexed slots so
/// the outcome is independent of scheduling. max_threads 0 uses the hardware
/// count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                         int max_threads = 0) {
    if (n == 0) return;
    unsigned requested = max_threads > 0 ? static_cast<unsigned>(max_threads)
                                         : std::thread::hardware_concurrency();
    const unsigned workers = std::max(1u, std::min<unsigned>(requested, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace adsrc
