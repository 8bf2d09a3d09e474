#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace selfheal {

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Results are
/// gathered by index, so the output order never depends on scheduling. The
/// first exception thrown by fn is rethrown after all workers have joined.
template <typename Result>
std::vector<Result> parallel_map(std::size_t count, int workers, const std::function<Result(std::size_t)>& fn) {
    std::vector<Result> results(count);
    const auto n_threads = static_cast<std::size_t>(std::clamp<long>(workers, 1, static_cast<long>(std::max<std::size_t>(count, 1))));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) results[i] = fn(i);
        return results;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (std::size_t w = 0; w < n_threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        results[i] = fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

}  // namespace selfheal
