#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rbsde {

// Global worker cap, set once by the CLI --threads flag. 0 = auto.
inline std::size_t& thread_cap() {
    static std::size_t cap = 0;
    return cap;
}

inline std::size_t effective_threads() {
    std::size_t hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const std::size_t cap = thread_cap();
    return cap == 0 ? std::min<std::size_t>(hw, 8) : std::min(hw, cap);
}

// Runs fn(begin, end) over [0, n) split into a FIXED number of chunks that is
// independent of the worker count, so floating-point reductions assembled
// chunk-by-chunk stay deterministic under any --threads setting.
inline void parallel_chunks(std::size_t n,
                            const std::function<void(std::size_t chunk, std::size_t begin, std::size_t end)>& fn,
                            std::size_t n_chunks = 64) {
    if (n == 0) return;
    n_chunks = std::min(n_chunks, n);
    const std::size_t workers = std::min(effective_threads(), n_chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) {
            const std::size_t b = c * n / n_chunks;
            const std::size_t e = (c + 1) * n / n_chunks;
            fn(c, b, e);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t c = next.fetch_add(1);
                if (c >= n_chunks) return;
                const std::size_t b = c * n / n_chunks;
                const std::size_t e = (c + 1) * n / n_chunks;
                try {
                    fn(c, b, e);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next.store(n_chunks);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Element-wise parallel loop; each index writes only its own slots.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    parallel_chunks(n, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) fn(i);
    });
}

}  // namespace rbsde
