#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gdls {

inline unsigned default_threads() {
    unsigned h = std::thread::hardware_concurrency();
    return h ? h : 1;
}

/// Run body(i) for i in [0, count) across `threads` workers. Work items are
/// handed out through an atomic counter; the first exception aborts the pool
/// and is rethrown on the calling thread. Callers are responsible for writing
/// results into per-index slots so the output is schedule-independent.
template <typename F>
void parallel_for(std::size_t count, unsigned threads, F&& body) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::size_t nw = std::min<std::size_t>(threads, count);
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (std::size_t k = 0; k < nw; ++k) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace gdls
