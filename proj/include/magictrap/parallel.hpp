#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace magictrap {

/// Worker count from MAGICTRAP_THREADS, else the machine's parallelism.
inline std::size_t default_thread_count()
{
    if (const char* env = std::getenv("MAGICTRAP_THREADS")) {
        try {
            const long n = std::stol(env);
            if (n >= 1)
                return static_cast<std::size_t>(n);
        } catch (...) {
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Applies fn to every index in [0, n) and stores results by index, so the
/// output never depends on scheduling. The first exception (lowest index) is
/// rethrown after all workers join.
template <class Result, class Fn>
std::vector<Result> parallel_map(std::size_t n, Fn&& fn, std::size_t threads = default_thread_count())
{
    std::vector<Result> out(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                out[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t k = 0; k < threads; ++k)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

} // namespace magictrap
