#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace cdslice {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
/// written to per-index slots so the outcome does not depend on scheduling.
/// Returns the exception thrown for each index (null where fn succeeded).
inline std::vector<std::exception_ptr> parallel_for(std::size_t n, std::size_t threads,
                                                    const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    auto run = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) run(i);
        return errors;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) run(i);
        });
    for (auto& th : pool) th.join();
    return errors;
}

}  // namespace cdslice
