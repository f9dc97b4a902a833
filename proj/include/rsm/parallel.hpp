#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rsm {

/// Splits [0, count) into `workers` contiguous chunks and runs
/// fn(begin, end, worker) on each. Chunk boundaries depend only on count and
/// workers, so per-item results never depend on scheduling. The first
/// exception thrown by any worker is rethrown on the caller.
template <class Fn> void parallel_for(std::size_t count, unsigned workers, Fn &&fn) {
    workers = std::max(1u, workers);
    if (workers == 1 || count < 2) {
        fn(std::size_t{0}, count, 0u);
        return;
    }
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t begin = count * w / workers;
            const std::size_t end = count * (w + 1) / workers;
            pool.emplace_back([&, begin, end, w] {
                try {
                    fn(begin, end, w);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            });
        }
    }
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace rsm
