#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace defrag {

// Runs task(i) for i in [0, count) on up to `threads` workers (0 = hardware
// concurrency). Results land at index i, so output order never depends on
// scheduling.
template <typename Result, typename Task>
std::vector<Result> parallel_map(int count, int threads, Task task) {
    std::vector<Result> results(static_cast<std::size_t>(count));
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, std::max(1, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) results[static_cast<std::size_t>(i)] = task(i);
        return results;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    results[static_cast<std::size_t>(i)] = task(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

}  // namespace defrag
