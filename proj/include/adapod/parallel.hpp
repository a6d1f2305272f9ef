#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace adapod {

/// Number of hardware threads, at least 1.
inline unsigned default_thread_count()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) over `threads` workers using a fixed
/// contiguous partition. Each index is visited exactly once, so bodies that
/// write only to slot i produce results independent of the thread count.
/// The exception thrown for the smallest failing chunk is rethrown.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body && body)
{
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
    if (workers <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }

    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
    {
        const std::size_t begin = n * w / workers;
        const std::size_t end = n * (w + 1) / workers;
        pool.emplace_back([&, w, begin, end] {
            try
            {
                for (std::size_t i = begin; i < end; ++i)
                    body(i);
            }
            catch (...)
            {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto & t : pool)
        t.join();
    for (auto & e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace adapod
