#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace paxray {

namespace detail {
inline std::atomic<unsigned>& worker_count() {
    static std::atomic<unsigned> n{1};
    return n;
}
}  // namespace detail

/// Number of worker threads used by parallel_for. Defaults to 1.
inline unsigned num_threads() noexcept { return detail::worker_count().load(); }

inline void set_num_threads(unsigned n) noexcept { detail::worker_count().store(std::max(1u, n)); }

/// Runs fn(i) for i in [0, n). Each index is handled by exactly one worker and
/// work items must write to disjoint outputs, so results never depend on the
/// thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(num_threads(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace paxray
